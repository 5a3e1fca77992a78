#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ticksync/timeline.hpp"

namespace ticksync {

/// Match count for every candidate shift between a tick-indexed event series
/// f (length M) and an anchored binary series g (length N):
///   counts[k] = sum_m f_m * g_{m + shift_at(k)},  shift in [-M+1, N-1].
struct ScoreProfile {
    std::int64_t first_shift = 0; // == -(M-1)
    std::vector<std::uint64_t> counts; // length M+N-1

    std::int64_t shift_at(std::size_t k) const { return first_shift + static_cast<std::int64_t>(k); }
};

/// Result of the shift search. tie_count > 1 (and confidence 0) flags an
/// ambiguous profile; that is a valid result, not an error.
struct ShiftEstimate {
    std::int64_t shift = 0;
    std::uint64_t match_count = 0;
    std::uint64_t runner_up_count = 0;
    std::uint64_t tie_count = 1;
    UtcInstant anchor_utc_of_tick0{};
    double confidence = 0.0;

    friend bool operator==(const ShiftEstimate&, const ShiftEstimate&) = default;
};

/// Reference path: direct double loop over the ones of f and g. Exact, and
/// deliberately independent of the transform path so the two can check each
/// other.
ScoreProfile brute_force_profile(const TickEventSeries& f, const AnchoredBinarySeries& g);

/// Transform path: the same profile in O((M+N) log (M+N)) via fast
/// convolution of dense f with index-reversed g. Counts are integers
/// recovered by rounding; falls back to the brute-force path if the
/// pre-rounding residual is not clearly below one half.
ScoreProfile fast_profile(const TickEventSeries& f, const AnchoredBinarySeries& g);

inline constexpr int kDefaultMinEvents = 10;

/// Finds the shift with the maximal match count (smallest shift wins ties)
/// and derives the UTC anchor of game tick 0. Throws InsufficientEvents /
/// NoPresses; an ambiguous profile is returned, not thrown.
ShiftEstimate estimate_shift(const TickEventSeries& f, const AnchoredBinarySeries& g,
                             int min_events = kDefaultMinEvents);

/// Applies an estimate: event tick m happens at g's sample index m + shift.
std::vector<std::pair<std::int64_t, UtcInstant>>
anchor_events(const TickEventSeries& f, const ShiftEstimate& est, const AnchoredBinarySeries& g);

} // namespace ticksync
