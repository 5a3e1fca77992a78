#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ticksync/timeline.hpp"

namespace ticksync {

/// A fixed-rate sensor recording. Sample i nominally sits at
/// start + i * sample_period. validity[i] == 0 marks a dropout; all channel
/// values of an invalid sample are canonically NaN. Channel names are plain
/// identifiers ([A-Za-z0-9_]+) so the CSV form never needs quoting.
struct SensorStream {
    std::string name;
    std::int64_t sample_period_ns = 0;
    UtcInstant start{};
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels; // [channel][sample]
    std::vector<std::uint8_t> validity;        // per sample

    std::int64_t size() const { return static_cast<std::int64_t>(validity.size()); }
    const std::vector<double>* channel(std::string_view channel_name) const;
};

/// NaN-aware equality: two streams are equal when they differ at most in NaN
/// payload (NaN cells match NaN cells).
bool operator==(const SensorStream& a, const SensorStream& b);

struct GameEvent {
    std::int64_t tick = 0;
    std::string name;
    std::map<std::string, std::string> attrs;

    friend bool operator==(const GameEvent&, const GameEvent&) = default;
};

/// Tick-indexed event log with no real-time anchor. Ticks are non-decreasing
/// and all below the horizon.
struct GameEventLog {
    std::vector<GameEvent> events;
    Rate tickrate{128};
    std::int64_t horizon = 1;

    friend bool operator==(const GameEventLog&, const GameEventLog&) = default;
};

/// Maximal runs of invalid samples, as half-open [start, end) index pairs.
struct GapReport {
    std::string stream_name;
    std::vector<std::pair<std::int64_t, std::int64_t>> gaps;

    friend bool operator==(const GapReport&, const GapReport&) = default;
};

/// Sensor CSV: first line `# sample_period_ns=<int>`, then a header
/// `timestamp,<chan>,...`, then one row per sample with an RFC 3339
/// timestamp. Empty value cells mark an invalid sample. The start of an
/// empty (zero-row) stream is not representable and parses back as epoch.
SensorStream parse_sensor_csv(std::string_view text, std::string name = "");
std::string serialize_sensor_csv(const SensorStream& stream);

/// Game event log: one JSON object per line with integer `tick`, string
/// `name` and an optional string-valued `attrs` object; an optional final
/// `{"horizon":<int>,"tickrate":<int>}` record pins the horizon (otherwise
/// last tick + 1).
GameEventLog parse_game_events(std::string_view text);
std::string serialize_game_events(const GameEventLog& log);

/// Deduplicated, sorted ticks of `weapon_fire` events whose attrs["player"]
/// matches; throws NoSuchPlayer when nothing matches.
TickEventSeries extract_fire_series(const GameEventLog& log, const std::string& player);

/// The `lmb` channel as an anchored 0/1 series at target_rate. Pass-through
/// when rates match; any-press binning when the stream is faster; throws
/// UpsamplingUnsupported when it is slower. Invalid samples read as 0.
AnchoredBinarySeries extract_lmb_series(const SensorStream& mouse, const Rate& target_rate);

GapReport detect_gaps(const SensorStream& stream);

} // namespace ticksync
