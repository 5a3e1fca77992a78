#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ticksync/errors.hpp"

namespace ticksync {

/// An absolute UTC instant, stored as integer nanoseconds since the Unix
/// epoch. All time arithmetic in this library is exact integer math; there
/// is deliberately no floating-point path in or out of this type.
struct UtcInstant {
    std::int64_t ns = 0;

    friend auto operator<=>(const UtcInstant&, const UtcInstant&) = default;
};

inline UtcInstant operator+(UtcInstant t, std::int64_t delta_ns) { return {t.ns + delta_ns}; }
inline UtcInstant operator-(UtcInstant t, std::int64_t delta_ns) { return {t.ns - delta_ns}; }
inline std::int64_t operator-(UtcInstant a, UtcInstant b) { return a.ns - b.ns; }

/// RFC 3339 with nanosecond precision and a literal "Z" offset, e.g.
/// 2019-03-01T12:00:00.007812500Z. The axis is linear nanoseconds: no time
/// zones, no leap seconds. Formatting always emits nine fractional digits;
/// parsing accepts zero to nine.
std::string to_rfc3339(UtcInstant t);
UtcInstant parse_rfc3339(std::string_view text); // throws SchemaError

/// Exact rational sample rate in ticks per second, normalized on
/// construction. 128 Hz gives a tick of exactly 7,812,500 ns.
class Rate {
public:
    explicit Rate(std::int64_t num, std::int64_t den = 1); // throws Error unless num, den > 0

    static Rate from_period_ns(std::int64_t period_ns);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    /// Tick duration in integer nanoseconds. Throws Error when the duration
    /// is not a whole number of nanoseconds (series types require it).
    std::int64_t tick_duration_ns() const;

    friend bool operator==(const Rate&, const Rate&) = default;

private:
    std::int64_t num_;
    std::int64_t den_;
};

/// Fixed-rate 0/1 samples anchored in UTC: sample t sits at
/// start + t * tick_duration. Reads outside [0, size) are 0, matching the
/// zero-padding convention of the matching algorithm. Immutable once built.
class AnchoredBinarySeries {
public:
    AnchoredBinarySeries(UtcInstant start, Rate rate, std::vector<std::uint8_t> bits);

    UtcInstant start() const { return start_; }
    const Rate& rate() const { return rate_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }
    std::int64_t size() const { return static_cast<std::int64_t>(bits_.size()); }

    int bit(std::int64_t i) const {
        return (i >= 0 && i < size()) ? bits_[static_cast<std::size_t>(i)] : 0;
    }

    friend bool operator==(const AnchoredBinarySeries&, const AnchoredBinarySeries&) = default;

private:
    UtcInstant start_;
    Rate rate_;
    std::vector<std::uint8_t> bits_;
};

/// Sparse tick-indexed events with no real-time anchor. The horizon is the
/// number of ticks covered and is stored explicitly: trailing ticks may
/// contain no events, so it cannot be inferred from the last event.
class TickEventSeries {
public:
    TickEventSeries(Rate rate, std::vector<std::int64_t> event_ticks, std::int64_t horizon);

    static TickEventSeries from_dense(Rate rate, const std::vector<std::uint8_t>& dense);

    const Rate& rate() const { return rate_; }
    const std::vector<std::int64_t>& event_ticks() const { return event_ticks_; }
    std::int64_t horizon() const { return horizon_; }

    friend bool operator==(const TickEventSeries&, const TickEventSeries&) = default;

private:
    Rate rate_;
    std::vector<std::int64_t> event_ticks_; // strictly increasing, all in [0, horizon)
    std::int64_t horizon_;
};

/// Affine index-to-time mapping; t may lie outside [0, size).
UtcInstant sample_index_to_utc(const AnchoredBinarySeries& series, std::int64_t t);

/// Dense 0/1 view of length horizon().
std::vector<std::uint8_t> densify(const TickEventSeries& f);

} // namespace ticksync
