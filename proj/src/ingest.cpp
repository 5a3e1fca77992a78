#include "ticksync/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "ticksync/errors.hpp"

namespace ticksync {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
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

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

double parse_double_field(std::string_view field, std::int64_t line_no) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw SchemaError("expected a finite number, got '" + std::string(field) + "'", line_no);
    return v;
}

void format_double(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

} // namespace

const std::vector<double>* SensorStream::channel(std::string_view channel_name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == channel_name) return &channels[i];
    return nullptr;
}

bool operator==(const SensorStream& a, const SensorStream& b) {
    if (a.name != b.name || a.sample_period_ns != b.sample_period_ns || a.start != b.start ||
        a.channel_names != b.channel_names || a.validity != b.validity)
        return false;
    if (a.channels.size() != b.channels.size()) return false;
    for (std::size_t c = 0; c < a.channels.size(); ++c) {
        if (a.channels[c].size() != b.channels[c].size()) return false;
        for (std::size_t i = 0; i < a.channels[c].size(); ++i) {
            const double x = a.channels[c][i];
            const double y = b.channels[c][i];
            if (std::isnan(x) != std::isnan(y)) return false;
            if (!std::isnan(x) && x != y) return false;
        }
    }
    return true;
}

SensorStream parse_sensor_csv(std::string_view text, std::string name) {
    const auto lines = split_lines(text);
    if (lines.size() < 2) throw SchemaError("sensor csv needs a metadata line and a header");

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

    const auto header = split_fields(lines[1]);
    if (header.empty() || header[0] != "timestamp")
        throw SchemaError("header must start with 'timestamp'", 2);
    if (header.size() < 2) throw SchemaError("at least one channel column is required", 2);

    SensorStream stream;
    stream.name = std::move(name);
    stream.sample_period_ns = period;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (!is_identifier(header[c]))
            throw SchemaError("bad channel name '" + std::string(header[c]) + "'", 2);
        stream.channel_names.emplace_back(header[c]);
    }
    stream.channels.resize(stream.channel_names.size());

    UtcInstant prev{std::numeric_limits<std::int64_t>::min()};
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const std::int64_t line_no = static_cast<std::int64_t>(i) + 1;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != header.size())
            throw SchemaError("row has " + std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(header.size()),
                              line_no);

        const UtcInstant ts = parse_rfc3339(fields[0]);
        if (ts <= prev && i > 2) throw NonMonotonicTimestamps("timestamps must increase", line_no);
        prev = ts;

        const std::int64_t row = static_cast<std::int64_t>(stream.validity.size());
        if (row == 0) {
            stream.start = ts;
        } else {
            const std::int64_t expected = stream.start.ns + row * period;
            const std::int64_t dev = ts.ns - expected;
            if (dev > period / 2 || dev < -period / 2)
                throw PeriodMismatch("timestamp off the declared grid by " + std::to_string(dev) +
                                         " ns",
                                     line_no);
        }

        bool valid = true;
        for (std::size_t c = 1; c < fields.size(); ++c)
            if (fields[c].empty()) valid = false;
        stream.validity.push_back(valid ? 1 : 0);
        for (std::size_t c = 1; c < fields.size(); ++c)
            stream.channels[c - 1].push_back(valid ? parse_double_field(fields[c], line_no) : kNaN);
    }
    return stream;
}

std::string serialize_sensor_csv(const SensorStream& stream) {
    if (stream.sample_period_ns <= 0) throw Error("stream needs a positive sample period");
    if (stream.channel_names.empty() || stream.channels.size() != stream.channel_names.size())
        throw Error("stream channel names and data disagree");
    for (const auto& name : stream.channel_names)
        if (!is_identifier(name)) throw Error("bad channel name '" + name + "'");
    for (const auto& channel : stream.channels)
        if (channel.size() != stream.validity.size())
            throw Error("stream channels and validity must have equal length");

    std::string out = "# sample_period_ns=" + std::to_string(stream.sample_period_ns) + "\n";
    out += "timestamp";
    for (const auto& c : stream.channel_names) {
        out += ',';
        out += c;
    }
    out += '\n';
    for (std::int64_t i = 0; i < stream.size(); ++i) {
        out += to_rfc3339(stream.start + i * stream.sample_period_ns);
        for (const auto& channel : stream.channels) {
            out += ',';
            if (stream.validity[static_cast<std::size_t>(i)])
                format_double(out, channel[static_cast<std::size_t>(i)]);
        }
        out += '\n';
    }
    return out;
}

GameEventLog parse_game_events(std::string_view text) {
    const auto lines = split_lines(text);

    GameEventLog log;
    std::int64_t last_tick = -1;
    bool horizon_pinned = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::int64_t line_no = static_cast<std::int64_t>(i) + 1;
        if (lines[i].empty()) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception&) {
            throw MalformedLine("invalid JSON", line_no);
        }
        if (!j.is_object()) throw MalformedLine("expected a JSON object", line_no);

        if (j.contains("horizon")) {
            if (i + 1 != lines.size())
                throw MalformedLine("metadata record must be the final line", line_no);
            if (!j["horizon"].is_number_integer() || j["horizon"].get<std::int64_t>() <= 0)
                throw MalformedLine("horizon must be a positive integer", line_no);
            log.horizon = j["horizon"].get<std::int64_t>();
            horizon_pinned = true;
            if (j.contains("tickrate")) {
                if (!j["tickrate"].is_number_integer() || j["tickrate"].get<std::int64_t>() <= 0)
                    throw MalformedLine("tickrate must be a positive integer", line_no);
                log.tickrate = Rate(j["tickrate"].get<std::int64_t>());
            }
            continue;
        }

        GameEvent event;
        if (!j.contains("tick")) throw MissingTick("event has no tick", line_no);
        if (!j["tick"].is_number_integer()) throw MalformedLine("tick must be an integer", line_no);
        event.tick = j["tick"].get<std::int64_t>();
        if (event.tick < 0) throw NegativeTick("tick is negative", line_no);
        if (event.tick < last_tick)
            throw NonMonotonicTicks("ticks must be non-decreasing", line_no);
        last_tick = event.tick;

        if (!j.contains("name") || !j["name"].is_string())
            throw MalformedLine("event needs a string name", line_no);
        event.name = j["name"].get<std::string>();

        if (j.contains("attrs")) {
            if (!j["attrs"].is_object()) throw MalformedLine("attrs must be an object", line_no);
            for (const auto& [key, value] : j["attrs"].items()) {
                if (!value.is_string())
                    throw MalformedLine("attr values must be strings", line_no);
                event.attrs[key] = value.get<std::string>();
            }
        }
        log.events.push_back(std::move(event));
    }

    if (!horizon_pinned) log.horizon = last_tick + 1 > 0 ? last_tick + 1 : 1;
    if (log.horizon <= last_tick)
        throw SchemaError("horizon " + std::to_string(log.horizon) + " does not cover last tick " +
                          std::to_string(last_tick));
    return log;
}

std::string serialize_game_events(const GameEventLog& log) {
    std::int64_t prev = -1;
    for (const auto& event : log.events) {
        if (event.tick < prev || event.tick < 0)
            throw Error("event ticks must be non-decreasing and non-negative");
        prev = event.tick;
    }
    if (log.horizon <= prev || log.horizon <= 0)
        throw Error("horizon must cover every event tick");

    std::string out;
    for (const auto& event : log.events) {
        nlohmann::ordered_json j;
        j["tick"] = event.tick;
        j["name"] = event.name;
        if (!event.attrs.empty()) j["attrs"] = event.attrs;
        out += j.dump();
        out += '\n';
    }
    nlohmann::ordered_json meta;
    meta["horizon"] = log.horizon;
    if (log.tickrate.den() != 1)
        throw Error("tickrate with a non-integer ticks-per-second is not serializable");
    meta["tickrate"] = log.tickrate.num();
    out += meta.dump();
    out += '\n';
    return out;
}

TickEventSeries extract_fire_series(const GameEventLog& log, const std::string& player) {
    std::set<std::int64_t> ticks;
    for (const auto& event : log.events) {
        if (event.name != "weapon_fire") continue;
        const auto it = event.attrs.find("player");
        if (it != event.attrs.end() && it->second == player) ticks.insert(event.tick);
    }
    if (ticks.empty()) throw NoSuchPlayer("no weapon_fire events for player '" + player + "'");
    return TickEventSeries(log.tickrate, std::vector<std::int64_t>(ticks.begin(), ticks.end()),
                           log.horizon);
}

AnchoredBinarySeries extract_lmb_series(const SensorStream& mouse, const Rate& target_rate) {
    const std::vector<double>* lmb = mouse.channel("lmb");
    if (!lmb) throw MissingChannel("stream '" + mouse.name + "' has no 'lmb' channel");

    const std::int64_t tick = target_rate.tick_duration_ns();
    const std::int64_t period = mouse.sample_period_ns;
    if (period <= 0) throw Error("stream has no sample period");
    if (period > tick)
        throw UpsamplingUnsupported("stream rate is below the target rate");

    auto bit_of = [&](std::int64_t i) -> std::uint8_t {
        if (!mouse.validity[static_cast<std::size_t>(i)]) return 0;
        const double v = (*lmb)[static_cast<std::size_t>(i)];
        if (v != 0.0 && v != 1.0)
            throw SchemaError("lmb channel must be 0/1, got " + std::to_string(v));
        return v == 1.0 ? 1 : 0;
    };

    std::vector<std::uint8_t> bits;
    if (period == tick) {
        bits.resize(static_cast<std::size_t>(mouse.size()), 0);
        for (std::int64_t i = 0; i < mouse.size(); ++i) bits[static_cast<std::size_t>(i)] = bit_of(i);
    } else {
        // any-press binning: output bin b is 1 iff a valid pressed sample
        // falls in [b, b+1) tick windows
        if (mouse.size() > 0) {
            const std::int64_t last_bin = (mouse.size() - 1) * period / tick;
            bits.resize(static_cast<std::size_t>(last_bin) + 1, 0);
            for (std::int64_t i = 0; i < mouse.size(); ++i)
                if (bit_of(i)) bits[static_cast<std::size_t>(i * period / tick)] = 1;
        }
    }
    return AnchoredBinarySeries(mouse.start, target_rate, std::move(bits));
}

GapReport detect_gaps(const SensorStream& stream) {
    GapReport report;
    report.stream_name = stream.name;
    std::int64_t gap_start = -1;
    for (std::int64_t i = 0; i <= stream.size(); ++i) {
        const bool invalid = i < stream.size() && !stream.validity[static_cast<std::size_t>(i)];
        if (invalid && gap_start < 0) gap_start = i;
        if (!invalid && gap_start >= 0) {
            report.gaps.emplace_back(gap_start, i);
            gap_start = -1;
        }
    }
    return report;
}

} // namespace ticksync
