#include "ticksync/align.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "ticksync/errors.hpp"

namespace ticksync {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Nearest multiple of tick to delta, ties toward the earlier bin.
std::int64_t nearest_bin(std::int64_t delta, std::int64_t tick) {
    const std::int64_t q = floor_div(delta, tick);
    const std::int64_t r = delta - q * tick; // [0, tick)
    return r * 2 > tick ? q + 1 : q;
}

bool is_binary_channel(const std::vector<double>& values, const std::vector<std::uint8_t>& validity) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (validity[i] && values[i] != 0.0 && values[i] != 1.0) return false;
    return true;
}

} // namespace

const MergedColumn* MergedDataset::column(std::string_view name) const {
    for (const auto& c : columns)
        if (c.name == name) return &c;
    return nullptr;
}

bool operator==(const MergedDataset& a, const MergedDataset& b) {
    if (a.grid_start != b.grid_start || !(a.grid_rate == b.grid_rate) ||
        a.columns.size() != b.columns.size())
        return false;
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
        const auto& ca = a.columns[c];
        const auto& cb = b.columns[c];
        if (ca.name != cb.name || ca.prov != cb.prov || ca.values.size() != cb.values.size())
            return false;
        for (std::size_t i = 0; i < ca.values.size(); ++i) {
            if (std::isnan(ca.values[i]) != std::isnan(cb.values[i])) return false;
            if (!std::isnan(ca.values[i]) && ca.values[i] != cb.values[i]) return false;
        }
    }
    return true;
}

MergedDataset merge(const std::vector<SensorStream>& streams, const GameEventLog& game,
                    const ShiftEstimate& est, const AnchoredBinarySeries& g_meta,
                    const std::vector<std::string>& event_names) {
    if (streams.empty()) throw Error("merge needs at least one stream");
    for (const auto& stream : streams) {
        if (stream.size() > 0 && stream.sample_period_ns <= 0)
            throw Error("stream '" + stream.name + "' needs a positive sample period");
        if (stream.channels.size() != stream.channel_names.size())
            throw Error("stream '" + stream.name + "' channel names and data disagree");
        for (const auto& channel : stream.channels)
            if (channel.size() != stream.validity.size())
                throw Error("stream '" + stream.name + "' channels and validity disagree");
    }
    if (game.horizon <= 0) throw Error("game horizon must be positive");
    const std::int64_t tick = g_meta.rate().tick_duration_ns();
    const std::int64_t phase = g_meta.start().ns; // grid lattice: phase + k * tick

    const auto bin_of = [&](std::int64_t t_ns) { return nearest_bin(t_ns - phase, tick); };

    // Grid bounds: union of stream extents and the anchored game span.
    std::int64_t bin_min = std::numeric_limits<std::int64_t>::max();
    std::int64_t bin_max = std::numeric_limits<std::int64_t>::min();
    for (const auto& stream : streams) {
        if (stream.size() == 0) continue;
        bin_min = std::min(bin_min, bin_of(stream.start.ns));
        bin_max = std::max(bin_max, bin_of(stream.start.ns + (stream.size() - 1) * stream.sample_period_ns));
    }
    const std::int64_t game_first_bin = bin_of(est.anchor_utc_of_tick0.ns);
    const std::int64_t game_last_bin = bin_of(est.anchor_utc_of_tick0.ns + (game.horizon - 1) * tick);
    bin_min = std::min(bin_min, game_first_bin);
    bin_max = std::max(bin_max, game_last_bin);
    if (bin_min > bin_max) throw Error("nothing to merge: all sources are empty");
    const std::size_t length = static_cast<std::size_t>(bin_max - bin_min + 1);

    MergedDataset out;
    out.grid_start = UtcInstant{phase + bin_min * tick};
    out.grid_rate = g_meta.rate();

    for (const auto& stream : streams) {
        const bool empty = stream.size() == 0;
        const std::int64_t first = empty ? 0 : bin_of(stream.start.ns) - bin_min;
        const std::int64_t last =
            empty ? -1 : bin_of(stream.start.ns + (stream.size() - 1) * stream.sample_period_ns) - bin_min;

        for (std::size_t c = 0; c < stream.channel_names.size(); ++c) {
            MergedColumn column;
            column.name = stream.name.empty() ? stream.channel_names[c]
                                              : stream.name + "." + stream.channel_names[c];
            column.values.assign(length, kNaN);
            column.prov.assign(length, Provenance::out_of_range);
            for (std::int64_t b = first; b <= last; ++b)
                column.prov[static_cast<std::size_t>(b)] = Provenance::gap;

            const bool binary = is_binary_channel(stream.channels[c], stream.validity);
            if (binary && stream.sample_period_ns > tick)
                throw RateMismatch("binary channel '" + column.name +
                                   "' is slower than the grid; any-press binning needs rate >= grid");

            if (binary) {
                // any-press: a bin is 1 iff any valid pressed sample falls in
                // its [instant, instant+tick) window; 0 if any valid sample
                // falls there at all.
                for (std::int64_t i = 0; i < stream.size(); ++i) {
                    if (!stream.validity[static_cast<std::size_t>(i)]) continue;
                    const std::int64_t t = stream.start.ns + i * stream.sample_period_ns;
                    const std::size_t b =
                        static_cast<std::size_t>(floor_div(t - out.grid_start.ns, tick));
                    if (b >= length) continue;
                    const double v = stream.channels[c][static_cast<std::size_t>(i)];
                    if (column.prov[b] != Provenance::measured) {
                        column.prov[b] = Provenance::measured;
                        column.values[b] = v;
                    } else if (v == 1.0) {
                        column.values[b] = 1.0;
                    }
                }
            } else {
                std::vector<std::int64_t> best_distance(length, std::numeric_limits<std::int64_t>::max());
                for (std::int64_t i = 0; i < stream.size(); ++i) {
                    if (!stream.validity[static_cast<std::size_t>(i)]) continue;
                    const std::int64_t t = stream.start.ns + i * stream.sample_period_ns;
                    const std::int64_t b = bin_of(t) - bin_min;
                    if (b < 0 || static_cast<std::size_t>(b) >= length) continue;
                    const std::int64_t instant = out.grid_start.ns + b * tick;
                    const std::int64_t distance = t >= instant ? t - instant : instant - t;
                    if (distance < best_distance[static_cast<std::size_t>(b)]) {
                        best_distance[static_cast<std::size_t>(b)] = distance;
                        column.values[static_cast<std::size_t>(b)] =
                            stream.channels[c][static_cast<std::size_t>(i)];
                        column.prov[static_cast<std::size_t>(b)] = Provenance::measured;
                    }
                }
            }
            out.columns.push_back(std::move(column));
        }
    }

    // Game event columns: tick m lands exactly on bin m + shift (the game is
    // anchored on the grid lattice by construction).
    std::vector<std::string> names = event_names;
    if (names.empty()) {
        std::set<std::string> distinct;
        for (const auto& event : game.events) distinct.insert(event.name);
        names.assign(distinct.begin(), distinct.end());
    }
    for (const auto& name : names) {
        MergedColumn column;
        column.name = name;
        column.values.assign(length, kNaN);
        column.prov.assign(length, Provenance::out_of_range);
        for (std::int64_t b = game_first_bin - bin_min; b <= game_last_bin - bin_min; ++b) {
            column.values[static_cast<std::size_t>(b)] = 0.0;
            column.prov[static_cast<std::size_t>(b)] = Provenance::measured;
        }
        for (const auto& event : game.events) {
            if (event.name != name) continue;
            const std::int64_t b = game_first_bin - bin_min + event.tick;
            column.values[static_cast<std::size_t>(b)] = 1.0;
        }
        out.columns.push_back(std::move(column));
    }
    return out;
}

MatchReport match_report(const TickEventSeries& fire, const AnchoredBinarySeries& g,
                         const ShiftEstimate& est) {
    MatchReport report;
    std::set<std::int64_t> fire_targets;
    for (std::int64_t m : fire.event_ticks()) {
        const std::int64_t idx = m + est.shift;
        fire_targets.insert(idx);
        if (g.bit(idx))
            ++report.matched;
        else
            report.unmatched_fire.push_back(m);
    }
    for (std::int64_t n = 0; n < g.size(); ++n)
        if (g.bits()[static_cast<std::size_t>(n)] && !fire_targets.count(n))
            ++report.spurious_presses;
    return report;
}

CoverageReport coverage_report(const MergedDataset& dataset) {
    CoverageReport report;
    const std::int64_t length = dataset.size();

    for (const auto& column : dataset.columns) {
        ColumnCoverage coverage;
        coverage.name = column.name;
        std::int64_t measured = 0, gap_start = -1;
        for (std::int64_t i = 0; i <= length; ++i) {
            const bool is_gap =
                i < length && column.prov[static_cast<std::size_t>(i)] == Provenance::gap;
            if (i < length && column.prov[static_cast<std::size_t>(i)] == Provenance::measured)
                ++measured;
            if (is_gap && gap_start < 0) gap_start = i;
            if (!is_gap && gap_start >= 0) {
                coverage.gap_intervals.emplace_back(gap_start, i);
                gap_start = -1;
            }
        }
        coverage.measured_fraction =
            length == 0 ? 1.0 : static_cast<double>(measured) / static_cast<double>(length);
        report.columns.push_back(std::move(coverage));
    }

    const std::size_t n_cols = dataset.columns.size();
    report.pair_covered.assign(n_cols, std::vector<double>(n_cols, 1.0));
    for (std::size_t a = 0; a < n_cols; ++a) {
        for (std::size_t b = 0; b < n_cols; ++b) {
            std::int64_t gaps_a = 0, covered = 0;
            for (std::int64_t i = 0; i < length; ++i) {
                if (dataset.columns[a].prov[static_cast<std::size_t>(i)] != Provenance::gap) continue;
                ++gaps_a;
                if (dataset.columns[b].prov[static_cast<std::size_t>(i)] == Provenance::measured)
                    ++covered;
            }
            if (gaps_a > 0)
                report.pair_covered[a][b] = static_cast<double>(covered) / static_cast<double>(gaps_a);
        }
    }
    return report;
}

namespace {

char prov_code(Provenance p) {
    switch (p) {
    case Provenance::measured: return 'M';
    case Provenance::gap: return 'G';
    default: return 'O';
    }
}

Provenance prov_from_code(std::string_view s, std::int64_t line_no) {
    if (s == "M") return Provenance::measured;
    if (s == "G") return Provenance::gap;
    if (s == "O") return Provenance::out_of_range;
    throw SchemaError("bad provenance cell '" + std::string(s) + "'", line_no);
}

void format_double(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

} // namespace

std::string serialize_merged_csv(const MergedDataset& dataset) {
    std::string out =
        "# sample_period_ns=" + std::to_string(dataset.grid_rate.tick_duration_ns()) + "\n";
    out += "timestamp";
    for (const auto& column : dataset.columns) {
        out += ',';
        out += column.name;
    }
    for (const auto& column : dataset.columns) {
        out += ',';
        out += column.name;
        out += "_prov";
    }
    out += '\n';

    const std::int64_t tick = dataset.grid_rate.tick_duration_ns();
    for (std::int64_t i = 0; i < dataset.size(); ++i) {
        out += to_rfc3339(dataset.grid_start + i * tick);
        for (const auto& column : dataset.columns) {
            out += ',';
            if (column.prov[static_cast<std::size_t>(i)] == Provenance::measured)
                format_double(out, column.values[static_cast<std::size_t>(i)]);
        }
        for (const auto& column : dataset.columns) {
            out += ',';
            out += prov_code(column.prov[static_cast<std::size_t>(i)]);
        }
        out += '\n';
    }
    return out;
}

MergedDataset parse_merged_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() < 2) throw SchemaError("merged csv needs a metadata line and a header");

    constexpr std::string_view kPeriodPrefix = "# sample_period_ns=";
    if (lines[0].substr(0, kPeriodPrefix.size()) != kPeriodPrefix)
        throw SchemaError("first line must be '# sample_period_ns=<int>'", 1);
    std::int64_t period = 0;
    {
        const std::string_view v = lines[0].substr(kPeriodPrefix.size());
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), period);
        if (ec != std::errc{} || ptr != v.data() + v.size() || period <= 0)
            throw SchemaError("bad sample period '" + std::string(v) + "'", 1);
    }

    const auto header = split_csv_line(lines[1]);
    if (header.empty() || header[0] != "timestamp" || header.size() % 2 == 0)
        throw SchemaError("header must be timestamp,<col>...,<col>_prov,...", 2);
    const std::size_t n_cols = (header.size() - 1) / 2;

    MergedDataset dataset;
    dataset.grid_rate = Rate::from_period_ns(period);
    for (std::size_t c = 0; c < n_cols; ++c) {
        MergedColumn column;
        column.name = std::string(header[1 + c]);
        const std::string expected = column.name + "_prov";
        if (header[1 + n_cols + c] != expected)
            throw SchemaError("provenance column for '" + column.name + "' must be '" + expected +
                                  "'",
                              2);
        dataset.columns.push_back(std::move(column));
    }

    for (std::size_t i = 2; i < lines.size(); ++i) {
        const std::int64_t line_no = static_cast<std::int64_t>(i) + 1;
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != header.size())
            throw SchemaError("row width does not match header", line_no);

        const UtcInstant ts = parse_rfc3339(fields[0]);
        const std::int64_t row = static_cast<std::int64_t>(i) - 2;
        if (row == 0)
            dataset.grid_start = ts;
        else if (ts.ns != dataset.grid_start.ns + row * period)
            throw SchemaError("timestamp off the grid", line_no);

        for (std::size_t c = 0; c < n_cols; ++c) {
            const Provenance prov = prov_from_code(fields[1 + n_cols + c], line_no);
            const std::string_view cell = fields[1 + c];
            double value = kNaN;
            if (prov == Provenance::measured) {
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
                if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
                    throw SchemaError("measured cell must hold a finite number", line_no);
            } else if (!cell.empty()) {
                throw SchemaError("non-measured cell must be empty", line_no);
            }
            dataset.columns[c].values.push_back(value);
            dataset.columns[c].prov.push_back(prov);
        }
    }
    return dataset;
}

} // namespace ticksync
