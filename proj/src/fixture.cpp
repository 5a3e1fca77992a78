#include "ticksync/fixture.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <random>

#include <json.hpp>

#include "ticksync/clocksim.hpp"
#include "ticksync/errors.hpp"
#include "ticksync/ingest.hpp"

namespace ticksync {

namespace {

constexpr std::int64_t kTickNs = 7'812'500;    // 128 Hz
constexpr std::int64_t kImuPeriodNs = 3'906'250; // 256 Hz

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) {
    return bound == 0 ? 0 : rng() % bound;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

// Constant-plus-slow-drift clock error bounded by bound_ns over span_ns.
OffsetTrace make_clock_error(std::uint64_t seed, std::int64_t bound_ns, std::int64_t span_ns) {
    std::mt19937_64 rng(seed);
    const std::int64_t span_s = span_ns / 1'000'000'000 + 2;
    // 20 ms/h, capped so the wander over the whole span stays under half
    // the bound (long sessions would otherwise outrun it)
    const std::int64_t drift_num =
        std::min<std::int64_t>(20'000'000, bound_ns * 1800 / std::max<std::int64_t>(1, span_s));
    const NsPerSec drift = NsPerSec{rng() % 2 == 0 ? drift_num : -drift_num, 3600};
    const std::int64_t drift_span = std::abs(drift.num) * span_s / drift.den + 1;
    const std::int64_t initial_max = std::max<std::int64_t>(0, bound_ns - drift_span);
    const std::int64_t initial =
        initial_max == 0 ? 0
                         : static_cast<std::int64_t>(draw(rng, 2 * initial_max + 1)) - initial_max;
    ClockModel model;
    model.initial_offset_ns = initial;
    model.drift = drift;
    model.seed = seed;
    return simulate(model, std::nullopt, span_ns + 2'000'000'000, 1'000'000'000);
}

} // namespace

GeneratedFixture generate_fixture(const FixtureSpec& spec) {
    const std::int64_t m_len = spec.game_ticks;
    const std::int64_t n_len = spec.mouse_samples;
    if (spec.fires < 1 || m_len < 1 || n_len < 2) throw Error("fixture needs fires and room for them");
    if (spec.dropout < 0.0 || spec.dropout >= 1.0) throw Error("dropout must be in [0, 1)");
    if (spec.spurious < 0 || spec.gaps < 0 || spec.press_max_ticks < 1)
        throw Error("spurious, gaps and press length must be non-negative");
    if (spec.clock_error_ms < 0.0) throw Error("clock error bound must be non-negative");

    const std::int64_t pad = spec.press_max_ticks + 2;
    const std::int64_t min_spacing = spec.press_max_ticks + 2;
    const std::int64_t lo = std::max<std::int64_t>(0, pad - spec.shift_ticks);
    const std::int64_t hi =
        std::min<std::int64_t>(m_len - 1, n_len - 1 - pad - spec.press_max_ticks - spec.shift_ticks);
    if (hi < lo || hi - lo + 1 < static_cast<std::int64_t>(spec.fires) * min_spacing)
        throw Error("not enough game/mouse overlap at this shift for the requested fires");

    std::mt19937_64 fires_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 press_rng(spec.seed ^ 0x6a09e667f3bcc909ULL);
    std::mt19937_64 drop_rng(spec.seed ^ 0xbb67ae8584caa73bULL);
    std::mt19937_64 spur_rng(spec.seed ^ 0x3c6ef372fe94f82bULL);
    std::mt19937_64 gap_rng(spec.seed ^ 0xa54ff53a5f1d36f1ULL);
    std::mt19937_64 walk_rng(spec.seed ^ 0x510e527fade682d1ULL);
    std::mt19937_64 decoy_rng(spec.seed ^ 0x1f83d9abfb41bd6bULL);

    // Fire onsets: sorted draws plus forced spacing, so presses never merge.
    const std::int64_t slack = (hi - lo) - (static_cast<std::int64_t>(spec.fires) - 1) * min_spacing;
    std::vector<std::int64_t> offsets(static_cast<std::size_t>(spec.fires));
    for (auto& o : offsets) o = static_cast<std::int64_t>(draw(fires_rng, static_cast<std::uint64_t>(slack + 1)));
    std::sort(offsets.begin(), offsets.end());

    FixtureTruth truth;
    truth.shift_ticks = spec.shift_ticks;
    truth.mouse_start = spec.mouse_start;
    for (int i = 0; i < spec.fires; ++i) {
        FixtureFire fire;
        fire.tick = lo + offsets[static_cast<std::size_t>(i)] + i * min_spacing;
        fire.press_index = fire.tick + spec.shift_ticks;
        fire.press_time = spec.mouse_start + fire.press_index * kTickNs;
        // a quarter of the presses are instant taps; held presses alone would
        // make the true shift tie with its right neighbour
        fire.press_ticks = (i % 4 == 0)
                               ? 1
                               : 1 + static_cast<int>(draw(press_rng, static_cast<std::uint64_t>(
                                                                          spec.press_max_ticks)));
        truth.fires.push_back(fire);
    }

    // Dropout: remove presses for a fixed count of fires, never all the taps.
    const int drop_count = static_cast<int>(spec.dropout * spec.fires);
    std::vector<int> order(static_cast<std::size_t>(spec.fires));
    for (int i = 0; i < spec.fires; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = spec.fires - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(draw(drop_rng, static_cast<std::uint64_t>(i + 1)))]);
    for (int i = 0; i < drop_count; ++i) truth.fires[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].dropped = true;
    // The true shift is only a unique argmax if some surviving presses are
    // single-tick taps, so keep at least two through the dropout (swapping
    // held presses out instead, which preserves the dropout count).
    int taps_total = 0, taps_kept = 0;
    for (const auto& f : truth.fires) {
        if (f.press_ticks != 1) continue;
        ++taps_total;
        if (!f.dropped) ++taps_kept;
    }
    int taps_needed = std::min(2, taps_total);
    for (auto& f : truth.fires) {
        if (taps_kept >= taps_needed) break;
        if (!f.dropped || f.press_ticks != 1) continue;
        f.dropped = false;
        ++taps_kept;
        for (auto& other : truth.fires)
            if (!other.dropped && other.press_ticks > 1) {
                other.dropped = true;
                break;
            }
    }

    std::vector<std::uint8_t> lmb(static_cast<std::size_t>(n_len), 0);
    std::vector<std::uint8_t> press_mask(static_cast<std::size_t>(n_len), 0); // keep gaps clear of presses
    for (const auto& fire : truth.fires) {
        for (int k = -1; k <= fire.press_ticks; ++k) {
            const std::int64_t idx = fire.press_index + k;
            if (idx >= 0 && idx < n_len) press_mask[static_cast<std::size_t>(idx)] = 1;
        }
        if (fire.dropped) continue;
        for (int k = 0; k < fire.press_ticks; ++k)
            lmb[static_cast<std::size_t>(fire.press_index + k)] = 1;
    }

    // Spurious presses are menu/UI clicks: short taps, anywhere.
    truth.spurious_presses = spec.spurious;
    for (int s = 0; s < spec.spurious; ++s) {
        const std::int64_t onset = static_cast<std::int64_t>(draw(spur_rng, static_cast<std::uint64_t>(n_len)));
        const std::int64_t len = 1 + static_cast<std::int64_t>(draw(spur_rng, 2));
        for (std::int64_t k = onset; k < std::min(onset + len, n_len); ++k) {
            lmb[static_cast<std::size_t>(k)] = 1;
            press_mask[static_cast<std::size_t>(k)] = 1;
        }
    }

    // Coordinate gaps, disjoint and never touching a press.
    std::vector<std::uint8_t> in_gap(static_cast<std::size_t>(n_len), 0);
    int placed = 0;
    for (int attempt = 0; attempt < spec.gaps * 200 && placed < spec.gaps; ++attempt) {
        const std::int64_t len = 4 + static_cast<std::int64_t>(draw(gap_rng, 37));
        const std::int64_t start = static_cast<std::int64_t>(
            draw(gap_rng, static_cast<std::uint64_t>(std::max<std::int64_t>(1, n_len - len))));
        bool free = start >= 1 && start + len < n_len;
        for (std::int64_t k = start - 1; free && k <= start + len; ++k)
            if (press_mask[static_cast<std::size_t>(k)] || in_gap[static_cast<std::size_t>(k)]) free = false;
        if (!free) continue;
        for (std::int64_t k = start; k < start + len; ++k) in_gap[static_cast<std::size_t>(k)] = 1;
        truth.gap_intervals.emplace_back(start, start + len);
        ++placed;
    }
    if (placed < spec.gaps) throw Error("could not place the requested gap intervals");
    std::sort(truth.gap_intervals.begin(), truth.gap_intervals.end());

    // Per-stream clock error displaces recorded timestamps, bounded well
    // under half a tick so parsing still snaps to the declared grid.
    const std::int64_t bound_ns = std::llround(spec.clock_error_ms * 1e6);
    const std::int64_t mouse_span = (n_len - 1) * kTickNs;
    const std::int64_t imu_samples = 2 * n_len;
    const std::int64_t imu_span = (imu_samples - 1) * kImuPeriodNs;
    OffsetTrace mouse_err, imu_err;
    if (bound_ns > 0) {
        mouse_err = make_clock_error(spec.seed ^ 0x2b992ddfa23249d6ULL, bound_ns, mouse_span);
        imu_err = make_clock_error(spec.seed ^ 0x89abcdef01234567ULL, bound_ns, imu_span);
        truth.mouse_clock_error_start_ns = mouse_err.offsets_ns[0];
        truth.imu_clock_error_start_ns = imu_err.offsets_ns[0];
    }

    GeneratedFixture fixture;

    // mouse.csv: x, y, lmb, rmb; gap rows have every value cell empty
    {
        std::string& out = fixture.mouse_csv;
        out = "# sample_period_ns=" + std::to_string(kTickNs) + "\n";
        out += "timestamp,x,y,lmb,rmb\n";
        double x = 400.0, y = 300.0;
        std::int64_t rmb_left = 0;
        for (std::int64_t i = 0; i < n_len; ++i) {
            x += static_cast<double>(static_cast<std::int64_t>(draw(walk_rng, 7)) - 3);
            y += static_cast<double>(static_cast<std::int64_t>(draw(walk_rng, 7)) - 3);
            if (rmb_left == 0 && draw(walk_rng, 500) == 0) rmb_left = 2 + static_cast<std::int64_t>(draw(walk_rng, 6));
            const int rmb = rmb_left > 0 ? 1 : 0;
            if (rmb_left > 0) --rmb_left;

            std::int64_t t = spec.mouse_start.ns + i * kTickNs;
            if (bound_ns > 0) t += offset_at(mouse_err, i * kTickNs);
            out += to_rfc3339(UtcInstant{t});
            if (in_gap[static_cast<std::size_t>(i)]) {
                out += ",,,,\n";
                continue;
            }
            out += ',';
            append_double(out, x);
            out += ',';
            append_double(out, y);
            out += ',';
            out += lmb[static_cast<std::size_t>(i)] ? '1' : '0';
            out += ',';
            out += rmb ? '1' : '0';
            out += '\n';
        }
    }

    // imu.csv: continuous 256 Hz accelerometer-style walk
    {
        std::string& out = fixture.imu_csv;
        out = "# sample_period_ns=" + std::to_string(kImuPeriodNs) + "\n";
        out += "timestamp,ax,ay\n";
        double ax = 0.0, ay = 0.0;
        for (std::int64_t i = 0; i < imu_samples; ++i) {
            ax += 0.25 * static_cast<double>(static_cast<std::int64_t>(draw(walk_rng, 9)) - 4);
            ay += 0.25 * static_cast<double>(static_cast<std::int64_t>(draw(walk_rng, 9)) - 4);
            std::int64_t t = spec.mouse_start.ns + i * kImuPeriodNs;
            if (bound_ns > 0) t += offset_at(imu_err, i * kImuPeriodNs);
            out += to_rfc3339(UtcInstant{t});
            out += ',';
            append_double(out, ax);
            out += ',';
            append_double(out, ay);
            out += '\n';
        }
    }

    // game.jsonl: the player's fires plus decoy events and a second player
    {
        GameEventLog log;
        log.horizon = m_len;
        log.tickrate = Rate(128);
        std::vector<GameEvent> events;
        for (const auto& fire : truth.fires)
            events.push_back(GameEvent{fire.tick, "weapon_fire", {{"player", spec.player}}});
        const int decoy_fires = spec.fires / 3 + 2;
        for (int i = 0; i < decoy_fires; ++i)
            events.push_back(GameEvent{
                static_cast<std::int64_t>(draw(decoy_rng, static_cast<std::uint64_t>(m_len))),
                "weapon_fire",
                {{"player", "p2"}}});
        const int steps = spec.fires / 2 + 5;
        for (int i = 0; i < steps; ++i)
            events.push_back(GameEvent{
                static_cast<std::int64_t>(draw(decoy_rng, static_cast<std::uint64_t>(m_len))),
                "footstep",
                {{"player", draw(decoy_rng, 2) ? spec.player : "p2"}, {"surface", "concrete"}}});
        for (int i = 0; i < steps / 2 + 1; ++i)
            events.push_back(GameEvent{
                static_cast<std::int64_t>(draw(decoy_rng, static_cast<std::uint64_t>(m_len))),
                "player_jump",
                {{"player", draw(decoy_rng, 2) ? spec.player : "p2"}}});
        std::stable_sort(events.begin(), events.end(),
                         [](const GameEvent& a, const GameEvent& b) { return a.tick < b.tick; });
        log.events = std::move(events);
        fixture.game_jsonl = serialize_game_events(log);
    }

    // truth.json
    {
        nlohmann::ordered_json j;
        j["seed"] = spec.seed;
        j["shift_ticks"] = truth.shift_ticks;
        j["player"] = spec.player;
        j["tickrate"] = 128;
        j["game_ticks"] = m_len;
        j["mouse_samples"] = n_len;
        j["mouse_start"] = to_rfc3339(truth.mouse_start);
        j["clock_error_bound_ms"] = spec.clock_error_ms;
        j["mouse_clock_error_start_ns"] = truth.mouse_clock_error_start_ns;
        j["imu_clock_error_start_ns"] = truth.imu_clock_error_start_ns;
        j["spurious_presses"] = truth.spurious_presses;
        nlohmann::ordered_json fires = nlohmann::ordered_json::array();
        for (const auto& fire : truth.fires) {
            nlohmann::ordered_json f;
            f["tick"] = fire.tick;
            f["press_index"] = fire.press_index;
            f["press_time"] = to_rfc3339(fire.press_time);
            f["press_ticks"] = fire.press_ticks;
            f["dropped"] = fire.dropped;
            fires.push_back(std::move(f));
        }
        j["fires"] = std::move(fires);
        nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
        for (const auto& [a, b] : truth.gap_intervals) gaps.push_back({a, b});
        j["gap_intervals"] = std::move(gaps);
        fixture.truth_json = j.dump(2) + "\n";
    }

    fixture.truth = std::move(truth);
    return fixture;
}

} // namespace ticksync
