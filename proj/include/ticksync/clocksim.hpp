#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ticksync/timeline.hpp"

namespace ticksync {

/// Signed rational rate in nanoseconds of offset per second of true time.
struct NsPerSec {
    std::int64_t num = 0;
    std::int64_t den = 1; // > 0

    static NsPerSec from_ms_per_hour(double ms);
    bool is_zero() const { return num == 0; }

    friend bool operator==(const NsPerSec&, const NsPerSec&) = default;
};

/// A free-running clock: offset(t) = initial_offset + drift * t, plus
/// bounded white noise per reading. Noise is uniform on ±sqrt(3)*stddev so
/// the stated standard deviation is matched while excursions stay bounded,
/// which is what disciplined-clock traces actually look like.
struct ClockModel {
    std::int64_t initial_offset_ns = 0;
    NsPerSec drift{};
    std::int64_t jitter_stddev_ns = 0;
    std::uint64_t seed = 0;
};

enum class CorrectionMode { step, slew };

/// Periodic correction toward the reference. step: the offset is set to a
/// fresh measurement-error sample at each correction instant. slew: the
/// offset moves toward that sample at most slew_rate_limit.
struct DisciplinePolicy {
    std::int64_t correction_interval_ns = 600'000'000'000; // 10 min
    CorrectionMode mode = CorrectionMode::step;
    NsPerSec slew_rate_limit{500'000, 1}; // 500 us/s; ignored by step
    std::int64_t measurement_error_stddev_ns = 10'000; // reference accuracy
};

/// offsets[i] is clock-minus-reference at true time i * sample_period.
/// At an instant that is both a sample and a correction time the recorded
/// value is the pre-correction offset (the correction takes effect just
/// after), so the sawtooth peak drift * interval is observable exactly.
struct OffsetTrace {
    std::int64_t sample_period_ns = 0;
    std::vector<std::int64_t> offsets_ns;

    std::int64_t duration_ns() const {
        return offsets_ns.empty() ? 0
                                  : static_cast<std::int64_t>(offsets_ns.size() - 1) * sample_period_ns;
    }

    friend bool operator==(const OffsetTrace&, const OffsetTrace&) = default;
};

/// Deterministic given the model seed. Samples cover [0, duration] at
/// sample_period; throws InvalidDuration when duration < sample_period.
OffsetTrace simulate(const ClockModel& model, const std::optional<DisciplinePolicy>& policy,
                     std::int64_t duration_ns, std::int64_t sample_period_ns);

struct AccuracyStats {
    std::int64_t max_abs_ns = 0;
    std::int64_t mean_abs_ns = 0;
    std::int64_t rms_ns = 0;

    friend bool operator==(const AccuracyStats&, const AccuracyStats&) = default;
};

/// Statistics over samples at t >= discard_initial; throws EmptyWindow when
/// the discard removes everything.
AccuracyStats accuracy_stats(const OffsetTrace& trace, std::int64_t discard_initial_ns);

/// Linear interpolation of the trace at an arbitrary instant (t relative to
/// the trace origin); throws TraceTooShort outside [0, duration].
std::int64_t offset_at(const OffsetTrace& trace, std::int64_t t_ns);

/// Displaces each sample of g by the interpolated clock offset at its
/// nominal time, re-quantized to the grid: a sample moves by
/// round(offset / tick_duration) ticks. Trace time 0 is aligned with
/// g.start(); the trace must cover g's whole span.
AnchoredBinarySeries perturb_series(const AnchoredBinarySeries& g, const OffsetTrace& trace);

/// CSV with header `t_ns,offset_ns`, one row per sample.
std::string serialize_offset_trace(const OffsetTrace& trace);
OffsetTrace parse_offset_trace(std::string_view text);

} // namespace ticksync
