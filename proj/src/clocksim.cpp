#include "ticksync/clocksim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include "ticksync/errors.hpp"

namespace ticksync {

namespace {

constexpr std::int64_t kNsPerSec = 1'000'000'000;

// p/q rounded to nearest, ties away from zero; q > 0.
std::int64_t round_div(__int128 p, __int128 q) {
    const __int128 half = q / 2;
    const __int128 r = p >= 0 ? (p + half) / q : (p - half) / q;
    return static_cast<std::int64_t>(r);
}

// Contribution of a rational ns-per-second rate over delta_ns of true time.
std::int64_t rate_times(const NsPerSec& rate, std::int64_t delta_ns) {
    return round_div(static_cast<__int128>(rate.num) * delta_ns,
                     static_cast<__int128>(rate.den) * kNsPerSec);
}

// Bounded white noise: uniform on ±sqrt(3)*stddev, matching the stddev.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

    std::int64_t draw(std::int64_t stddev_ns) {
        if (stddev_ns == 0) return 0;
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53; // [0, 1)
        const double amplitude = std::sqrt(3.0) * static_cast<double>(stddev_ns);
        return std::llround(amplitude * (2.0 * u - 1.0));
    }

private:
    std::mt19937_64 rng_;
};

// Piecewise-linear clock state between discipline events.
struct ClockState {
    std::int64_t seg_start_ns = 0;   // true time the segment began
    std::int64_t base_offset_ns = 0; // offset at seg_start
    // Active slew, if any: move toward target at net slope until t_cross.
    bool slewing = false;
    std::int64_t slew_target_ns = 0;
    NsPerSec net_slope{};          // drift + directed slew limit
    std::int64_t slew_cross_ns = 0; // true time the target is reached

    std::int64_t offset_at(std::int64_t t, const NsPerSec& drift) const {
        if (slewing) {
            if (t < slew_cross_ns)
                return base_offset_ns + rate_times(net_slope, t - seg_start_ns);
            return slew_target_ns + rate_times(drift, t - slew_cross_ns);
        }
        return base_offset_ns + rate_times(drift, t - seg_start_ns);
    }
};

void apply_correction(ClockState& state, std::int64_t now, const ClockModel& model,
                      const DisciplinePolicy& policy, NoiseSource& measurement_noise) {
    const std::int64_t measured = measurement_noise.draw(policy.measurement_error_stddev_ns);
    const std::int64_t current = state.offset_at(now, model.drift);

    if (policy.mode == CorrectionMode::step) {
        state = ClockState{now, measured};
        return;
    }

    // slew toward the measured value
    state.seg_start_ns = now;
    state.base_offset_ns = current;
    state.slewing = false;
    if (current == measured) return;

    const int dir = measured > current ? 1 : -1;
    // net = drift + dir * limit, over the common denominator
    const __int128 num = static_cast<__int128>(model.drift.num) * policy.slew_rate_limit.den +
                         static_cast<__int128>(dir) * policy.slew_rate_limit.num * model.drift.den;
    const __int128 den = static_cast<__int128>(model.drift.den) * policy.slew_rate_limit.den;

    state.slewing = true;
    state.slew_target_ns = measured;
    state.net_slope = NsPerSec{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
    if (num == 0 || (num > 0) != (measured > current)) {
        // drift overpowers the slew: the offset keeps diverging, just slower
        state.slew_cross_ns = std::numeric_limits<std::int64_t>::max();
        return;
    }
    // first whole nanosecond at or after the crossing
    const __int128 gap = static_cast<__int128>(measured - current) * den * kNsPerSec;
    const __int128 slope = num;
    __int128 dt = gap / slope;
    if (gap % slope != 0) ++dt;
    const __int128 cross = static_cast<__int128>(now) + dt;
    state.slew_cross_ns = cross > std::numeric_limits<std::int64_t>::max()
                              ? std::numeric_limits<std::int64_t>::max()
                              : static_cast<std::int64_t>(cross);
}

} // namespace

NsPerSec NsPerSec::from_ms_per_hour(double ms) {
    return NsPerSec{std::llround(ms * 1e6), 3600};
}

OffsetTrace simulate(const ClockModel& model, const std::optional<DisciplinePolicy>& policy,
                     std::int64_t duration_ns, std::int64_t sample_period_ns) {
    if (sample_period_ns <= 0 || duration_ns < sample_period_ns)
        throw InvalidDuration("duration must be at least one sample period");
    if (policy && policy->correction_interval_ns <= 0)
        throw InvalidDuration("correction interval must be positive");
    if (model.drift.den <= 0) throw Error("drift denominator must be positive");

    NoiseSource jitter(model.seed);
    NoiseSource measurement(model.seed ^ 0x9e3779b97f4a7c15ULL);

    ClockState state{0, model.initial_offset_ns};
    std::int64_t next_correction =
        policy ? policy->correction_interval_ns : std::numeric_limits<std::int64_t>::max();

    OffsetTrace trace;
    trace.sample_period_ns = sample_period_ns;
    const std::int64_t samples = duration_ns / sample_period_ns + 1;
    trace.offsets_ns.reserve(static_cast<std::size_t>(samples));

    for (std::int64_t i = 0; i < samples; ++i) {
        const std::int64_t t = i * sample_period_ns;
        // Corrections strictly before this sample instant take effect first;
        // one exactly at it is recorded pre-correction.
        while (next_correction < t) {
            apply_correction(state, next_correction, model, *policy, measurement);
            next_correction += policy->correction_interval_ns;
        }
        trace.offsets_ns.push_back(state.offset_at(t, model.drift) +
                                   jitter.draw(model.jitter_stddev_ns));
    }
    return trace;
}

AccuracyStats accuracy_stats(const OffsetTrace& trace, std::int64_t discard_initial_ns) {
    if (trace.sample_period_ns <= 0) throw Error("trace has no sample period");
    AccuracyStats stats;
    __int128 sum_abs = 0;
    __int128 sum_sq = 0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < trace.offsets_ns.size(); ++i) {
        const std::int64_t t = static_cast<std::int64_t>(i) * trace.sample_period_ns;
        if (t < discard_initial_ns) continue;
        const std::int64_t o = trace.offsets_ns[i];
        const std::int64_t a = o < 0 ? -o : o;
        stats.max_abs_ns = std::max(stats.max_abs_ns, a);
        sum_abs += a;
        sum_sq += static_cast<__int128>(o) * o;
        ++n;
    }
    if (n == 0) throw EmptyWindow("discard window removed every sample");
    stats.mean_abs_ns = round_div(sum_abs, n);
    stats.rms_ns = std::llround(std::sqrt(static_cast<double>(sum_sq) / static_cast<double>(n)));
    return stats;
}

std::int64_t offset_at(const OffsetTrace& trace, std::int64_t t_ns) {
    if (trace.sample_period_ns <= 0 || trace.offsets_ns.empty())
        throw TraceTooShort("empty trace");
    if (t_ns < 0 || t_ns > trace.duration_ns())
        throw TraceTooShort("instant outside the trace span");
    const std::int64_t j = t_ns / trace.sample_period_ns;
    const std::int64_t r = t_ns % trace.sample_period_ns;
    const std::int64_t oj = trace.offsets_ns[static_cast<std::size_t>(j)];
    if (r == 0) return oj;
    const std::int64_t oj1 = trace.offsets_ns[static_cast<std::size_t>(j + 1)];
    return oj + round_div(static_cast<__int128>(oj1 - oj) * r, trace.sample_period_ns);
}

AnchoredBinarySeries perturb_series(const AnchoredBinarySeries& g, const OffsetTrace& trace) {
    const std::int64_t tick = g.rate().tick_duration_ns();
    const std::int64_t n = g.size();
    if (n > 0 && trace.duration_ns() < (n - 1) * tick)
        throw TraceTooShort("trace does not cover the series span");

    std::vector<std::uint8_t> bits = g.bits();
    std::fill(bits.begin(), bits.end(), 0);
    for (std::int64_t t = 0; t < n; ++t) {
        if (!g.bits()[static_cast<std::size_t>(t)]) continue;
        const std::int64_t offset = offset_at(trace, t * tick);
        const std::int64_t moved = t + round_div(offset, tick);
        if (moved >= 0 && moved < n) bits[static_cast<std::size_t>(moved)] = 1;
    }
    return AnchoredBinarySeries(g.start(), g.rate(), std::move(bits));
}

std::string serialize_offset_trace(const OffsetTrace& trace) {
    std::string out = "t_ns,offset_ns\n";
    for (std::size_t i = 0; i < trace.offsets_ns.size(); ++i) {
        out += std::to_string(static_cast<std::int64_t>(i) * trace.sample_period_ns);
        out += ',';
        out += std::to_string(trace.offsets_ns[i]);
        out += '\n';
    }
    return out;
}

namespace {

std::int64_t parse_int_field(std::string_view field, std::int64_t line_no) {
    std::int64_t v = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw SchemaError("expected an integer, got '" + std::string(field) + "'", line_no);
    return v;
}

} // namespace

OffsetTrace parse_offset_trace(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    if (lines.empty() || lines[0] != "t_ns,offset_ns")
        throw SchemaError("expected header 't_ns,offset_ns'", 1);
    if (lines.size() < 3) throw SchemaError("offset trace needs at least two samples");

    OffsetTrace trace;
    std::vector<std::int64_t> times;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos)
            throw SchemaError("expected 't_ns,offset_ns' row", static_cast<std::int64_t>(i + 1));
        times.push_back(parse_int_field(line.substr(0, comma), static_cast<std::int64_t>(i + 1)));
        trace.offsets_ns.push_back(
            parse_int_field(line.substr(comma + 1), static_cast<std::int64_t>(i + 1)));
    }

    trace.sample_period_ns = times[1] - times[0];
    if (times[0] != 0 || trace.sample_period_ns <= 0)
        throw SchemaError("trace samples must start at 0 with a positive period");
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] != static_cast<std::int64_t>(i) * trace.sample_period_ns)
            throw SchemaError("trace samples must sit on a uniform grid",
                              static_cast<std::int64_t>(i + 2));
    return trace;
}

} // namespace ticksync
