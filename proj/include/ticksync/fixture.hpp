#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ticksync/timeline.hpp"

namespace ticksync {

/// Parameters for a synthetic recording session: a game log of weapon fires
/// plus a mouse log whose LMB presses embed the fires at a known shift, with
/// controllable noise (missed presses, extra presses, coordinate gaps,
/// per-stream clock error). Deterministic per seed.
struct FixtureSpec {
    std::uint64_t seed = 1;
    std::int64_t shift_ticks = 0;
    int fires = 100;
    double dropout = 0.0; // fraction of presses missing from the mouse log
    int spurious = 0;     // extra presses unrelated to any fire
    int gaps = 0;         // coordinate dropout intervals (mouse lifted)
    std::int64_t game_ticks = 7680;    // M, at 128 Hz
    std::int64_t mouse_samples = 9600; // N
    double clock_error_ms = 0.0;       // bound on each stream's clock offset
    int press_max_ticks = 6;
    std::string player = "p1";
    UtcInstant mouse_start{1'577'836'800'000'000'000}; // 2020-01-01T00:00:00Z
};

struct FixtureFire {
    std::int64_t tick = 0;        // game tick of the shot
    std::int64_t press_index = 0; // mouse sample index of the press onset
    UtcInstant press_time{};      // true UTC of the press onset
    int press_ticks = 1;          // held length; 0 in the log when dropped
    bool dropped = false;
};

struct FixtureTruth {
    std::int64_t shift_ticks = 0;
    UtcInstant mouse_start{};
    std::vector<FixtureFire> fires;
    std::vector<std::pair<std::int64_t, std::int64_t>> gap_intervals; // half-open sample idx
    int spurious_presses = 0;
    std::int64_t mouse_clock_error_start_ns = 0;
    std::int64_t imu_clock_error_start_ns = 0;
};

struct GeneratedFixture {
    std::string mouse_csv;
    std::string imu_csv;
    std::string game_jsonl;
    std::string truth_json;
    FixtureTruth truth;
};

/// Throws Error when the requested fires/gaps do not fit the session
/// geometry (too little game/mouse overlap for the shift).
GeneratedFixture generate_fixture(const FixtureSpec& spec);

} // namespace ticksync
