#include <doctest.h>

#include <cmath>
#include <random>

#include "ticksync/errors.hpp"
#include "ticksync/ingest.hpp"

using namespace ticksync;

namespace {

const char* kThreeRows =
    "# sample_period_ns=10000000\n"
    "timestamp,x,y\n"
    "2020-01-01T00:00:00.000000000Z,1,2\n"
    "2020-01-01T00:00:00.010000000Z,,\n"
    "2020-01-01T00:00:00.020000000Z,3,4\n";

SensorStream random_stream(std::mt19937_64& rng) {
    SensorStream s;
    s.name = "s";
    s.sample_period_ns = 1'000'000 * (1 + static_cast<std::int64_t>(rng() % 20));
    s.start = UtcInstant{static_cast<std::int64_t>(rng() % 2'000'000'000'000ULL)};
    const int n_chan = 1 + static_cast<int>(rng() % 3);
    for (int c = 0; c < n_chan; ++c) s.channel_names.push_back("c" + std::to_string(c));
    s.channels.resize(s.channel_names.size());
    const int n = static_cast<int>(rng() % 40) + 1;
    for (int i = 0; i < n; ++i) {
        const bool valid = rng() % 5 != 0;
        s.validity.push_back(valid ? 1 : 0);
        for (auto& chan : s.channels)
            chan.push_back(valid ? static_cast<double>(static_cast<std::int64_t>(rng() % 4000)) / 8.0
                                 : std::numeric_limits<double>::quiet_NaN());
    }
    return s;
}

GameEventLog random_log(std::mt19937_64& rng) {
    GameEventLog log;
    log.tickrate = Rate(128);
    std::int64_t tick = 0;
    const int n = static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
        tick += static_cast<std::int64_t>(rng() % 5);
        GameEvent e;
        e.tick = tick;
        e.name = (rng() % 2) ? "weapon_fire" : "footstep";
        e.attrs["player"] = (rng() % 2) ? "p1" : "p2";
        if (rng() % 3 == 0) e.attrs["weapon"] = "ak47";
        log.events.push_back(std::move(e));
    }
    log.horizon = tick + 1 + static_cast<std::int64_t>(rng() % 100);
    return log;
}

} // namespace

TEST_CASE("sensor csv parses values and validity") {
    const auto s = parse_sensor_csv(kThreeRows, "m");
    CHECK(s.name == "m");
    CHECK(s.sample_period_ns == 10'000'000);
    CHECK(s.size() == 3);
    CHECK(s.validity == std::vector<std::uint8_t>{1, 0, 1});
    CHECK(s.channel_names == std::vector<std::string>{"x", "y"});
    CHECK((*s.channel("x"))[0] == 1.0);
    CHECK(std::isnan((*s.channel("x"))[1]));
    CHECK((*s.channel("y"))[2] == 4.0);
    CHECK(s.start == parse_rfc3339("2020-01-01T00:00:00Z"));
}

TEST_CASE("sensor csv edge cases and failure modes") {
    SUBCASE("empty data section is a valid zero-length stream") {
        const auto s = parse_sensor_csv("# sample_period_ns=10000000\ntimestamp,x\n");
        CHECK(s.size() == 0);
    }
    SUBCASE("rows off the declared grid are rejected") {
        const char* bad =
            "# sample_period_ns=10000000\n"
            "timestamp,x\n"
            "2020-01-01T00:00:00.000000000Z,1\n"
            "2020-01-01T00:00:00.010000000Z,2\n"
            "2020-01-01T00:00:00.035000000Z,3\n"; // 25 ms step
        CHECK_THROWS_AS(parse_sensor_csv(bad), PeriodMismatch);
    }
    SUBCASE("within half a period is accepted") {
        const char* ok =
            "# sample_period_ns=10000000\n"
            "timestamp,x\n"
            "2020-01-01T00:00:00.000000000Z,1\n"
            "2020-01-01T00:00:00.013000000Z,2\n";
        CHECK(parse_sensor_csv(ok).size() == 2);
    }
    SUBCASE("timestamps must increase") {
        const char* bad =
            "# sample_period_ns=10000000\n"
            "timestamp,x\n"
            "2020-01-01T00:00:00.010000000Z,1\n"
            "2020-01-01T00:00:00.010000000Z,2\n";
        CHECK_THROWS_AS(parse_sensor_csv(bad), NonMonotonicTimestamps);
    }
    SUBCASE("schema violations") {
        CHECK_THROWS_AS(parse_sensor_csv(""), SchemaError);
        CHECK_THROWS_AS(parse_sensor_csv("sample_period=5\ntimestamp,x\n"), SchemaError);
        CHECK_THROWS_AS(parse_sensor_csv("# sample_period_ns=10\nx,y\n"), SchemaError);
        CHECK_THROWS_AS(parse_sensor_csv("# sample_period_ns=10000000\ntimestamp\n"), SchemaError);
        CHECK_THROWS_AS(
            parse_sensor_csv("# sample_period_ns=10000000\ntimestamp,x\n"
                             "2020-01-01T00:00:00Z,1,9\n"),
            SchemaError);
    }
    SUBCASE("a partially empty row is one invalid sample") {
        const char* mixed =
            "# sample_period_ns=10000000\n"
            "timestamp,x,y\n"
            "2020-01-01T00:00:00.000000000Z,1,\n";
        const auto s = parse_sensor_csv(mixed);
        CHECK(s.validity == std::vector<std::uint8_t>{0});
        CHECK(std::isnan((*s.channel("x"))[0]));
    }
}

TEST_CASE("sensor csv round-trips canonical streams") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 60; ++i) {
        const auto s = random_stream(rng);
        CHECK(parse_sensor_csv(serialize_sensor_csv(s), s.name) == s);
    }
}

TEST_CASE("game log parses events and metadata") {
    const char* text =
        "{\"tick\":5,\"name\":\"weapon_fire\",\"attrs\":{\"player\":\"p1\"}}\n"
        "{\"tick\":5,\"name\":\"footstep\",\"attrs\":{\"player\":\"p2\"}}\n"
        "{\"tick\":9,\"name\":\"weapon_fire\",\"attrs\":{\"player\":\"p1\"}}\n"
        "{\"horizon\":64,\"tickrate\":128}\n";
    const auto log = parse_game_events(text);
    CHECK(log.events.size() == 3);
    CHECK(log.events[0].tick == 5);
    CHECK(log.events[0].name == "weapon_fire");
    CHECK(log.events[1].tick == 5); // duplicates retained in order
    CHECK(log.events[1].name == "footstep");
    CHECK(log.horizon == 64);
    CHECK(log.tickrate == Rate(128));
}

TEST_CASE("game log failure modes carry line numbers") {
    try {
        parse_game_events("{\"tick\":1,\"name\":\"a\"}\n{\"name\":\"b\"}\n");
        FAIL("expected MissingTick");
    } catch (const MissingTick& e) {
        CHECK(e.line_no == 2);
    }
    try {
        parse_game_events("{\"tick\":1,\"name\":\"a\"}\nnot json\n");
        FAIL("expected MalformedLine");
    } catch (const MalformedLine& e) {
        CHECK(e.line_no == 2);
    }
    CHECK_THROWS_AS(parse_game_events("{\"tick\":-3,\"name\":\"a\"}\n"), NegativeTick);
    CHECK_THROWS_AS(parse_game_events("{\"tick\":7,\"name\":\"a\"}\n{\"tick\":2,\"name\":\"b\"}\n"),
                    NonMonotonicTicks);
    CHECK_THROWS_AS(parse_game_events("{\"horizon\":5}\n{\"tick\":1,\"name\":\"a\"}\n"),
                    MalformedLine);
    CHECK_THROWS_AS(parse_game_events("{\"tick\":9,\"name\":\"a\"}\n{\"horizon\":5}\n"),
                    SchemaError);
}

TEST_CASE("horizon defaults to last tick + 1") {
    const auto log = parse_game_events("{\"tick\":41,\"name\":\"weapon_fire\"}\n");
    CHECK(log.horizon == 42);
    CHECK(parse_game_events("").horizon == 1);
}

TEST_CASE("serializers reject malformed hand-built values") {
    SensorStream s;
    s.name = "s";
    s.sample_period_ns = 1'000'000;
    s.channel_names = {"a", "b"};
    s.channels = {{1.0}, {2.0, 3.0}}; // lengths disagree
    s.validity = {1};
    CHECK_THROWS_AS(serialize_sensor_csv(s), Error);
    s.channels = {{1.0}, {2.0}};
    s.channel_names = {"a", "bad name"};
    CHECK_THROWS_AS(serialize_sensor_csv(s), Error);

    GameEventLog log;
    log.horizon = 5;
    log.events = {GameEvent{9, "weapon_fire", {}}};
    CHECK_THROWS_AS(serialize_game_events(log), Error); // tick beyond horizon
    log.events = {GameEvent{3, "a", {}}, GameEvent{1, "b", {}}};
    CHECK_THROWS_AS(serialize_game_events(log), Error); // decreasing ticks
}

TEST_CASE("game log round-trips") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 60; ++i) {
        const auto log = random_log(rng);
        CHECK(parse_game_events(serialize_game_events(log)) == log);
    }
}

TEST_CASE("extract_fire_series filters and deduplicates") {
    GameEventLog log;
    log.horizon = 100;
    log.events = {
        GameEvent{10, "weapon_fire", {{"player", "p1"}}},
        GameEvent{10, "weapon_fire", {{"player", "p1"}}},
        GameEvent{12, "weapon_fire", {{"player", "p2"}}},
        GameEvent{20, "footstep", {{"player", "p1"}}},
        GameEvent{40, "weapon_fire", {{"player", "p1"}}},
    };
    const auto f = extract_fire_series(log, "p1");
    CHECK(f.event_ticks() == std::vector<std::int64_t>{10, 40});
    CHECK(f.horizon() == 100);
    CHECK_THROWS_AS(extract_fire_series(log, "p9"), NoSuchPlayer);
}

TEST_CASE("extract_fire_series matches a hand filter on a synthetic log") {
    std::mt19937_64 rng(29);
    GameEventLog log;
    log.horizon = 4000;
    std::int64_t tick = 0;
    std::vector<std::int64_t> expected;
    for (int i = 0; i < 100; ++i) {
        tick += 1 + static_cast<std::int64_t>(rng() % 30);
        const bool fire = rng() % 2;
        const bool mine = rng() % 2;
        log.events.push_back(GameEvent{tick,
                                       fire ? "weapon_fire" : "player_jump",
                                       {{"player", mine ? "p1" : "p2"}}});
        if (fire && mine) expected.push_back(tick);
    }
    CHECK(extract_fire_series(log, "p1").event_ticks() == expected);
}

TEST_CASE("extract_lmb_series passes 128 Hz through and bins faster rates") {
    SensorStream s;
    s.name = "mouse";
    s.start = UtcInstant{0};

    SUBCASE("pass-through") {
        s.sample_period_ns = 7'812'500;
        s.channel_names = {"lmb"};
        s.channels = {{0, 1, 1, 0}};
        s.validity = {1, 1, 1, 1};
        CHECK(extract_lmb_series(s, Rate(128)).bits() == std::vector<std::uint8_t>{0, 1, 1, 0});
    }
    SUBCASE("any-press binning from 256 Hz") {
        s.sample_period_ns = 3'906'250;
        s.channel_names = {"lmb"};
        s.channels = {{0, 1, 0, 0, 1, 1}};
        s.validity = {1, 1, 1, 1, 1, 1};
        CHECK(extract_lmb_series(s, Rate(128)).bits() == std::vector<std::uint8_t>{1, 0, 1});
    }
    SUBCASE("invalid samples read as unpressed") {
        s.sample_period_ns = 7'812'500;
        s.channel_names = {"lmb"};
        s.channels = {{1, 1, 1}};
        s.validity = {1, 0, 1};
        CHECK(extract_lmb_series(s, Rate(128)).bits() == std::vector<std::uint8_t>{1, 0, 1});
    }
    SUBCASE("upsampling is refused") {
        s.sample_period_ns = 10'000'000; // 100 Hz
        s.channel_names = {"lmb"};
        s.channels = {{0, 1}};
        s.validity = {1, 1};
        CHECK_THROWS_AS(extract_lmb_series(s, Rate(128)), UpsamplingUnsupported);
    }
    SUBCASE("missing channel") {
        s.sample_period_ns = 7'812'500;
        s.channel_names = {"x"};
        s.channels = {{0.0}};
        s.validity = {1};
        CHECK_THROWS_AS(extract_lmb_series(s, Rate(128)), MissingChannel);
    }
}

TEST_CASE("any-press binning covers exactly the pressed tick windows") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 40; ++trial) {
        SensorStream s;
        s.start = UtcInstant{0};
        s.sample_period_ns = 1'953'125; // 512 Hz
        s.channel_names = {"lmb"};
        const int n = 64 + static_cast<int>(rng() % 64);
        s.channels.resize(1);
        for (int i = 0; i < n; ++i) {
            s.validity.push_back(rng() % 8 ? 1 : 0);
            s.channels[0].push_back(static_cast<double>(rng() % 2));
        }
        const auto bits = extract_lmb_series(s, Rate(128)).bits();
        const std::int64_t tick = 7'812'500;
        for (std::size_t b = 0; b < bits.size(); ++b) {
            bool expected = false;
            for (int i = 0; i < n; ++i) {
                const std::int64_t t = i * s.sample_period_ns;
                if (t >= static_cast<std::int64_t>(b) * tick &&
                    t < static_cast<std::int64_t>(b + 1) * tick && s.validity[i] &&
                    s.channels[0][i] == 1.0)
                    expected = true;
            }
            CHECK(bits[b] == (expected ? 1 : 0));
        }
    }
}

TEST_CASE("detect_gaps finds maximal invalid runs") {
    SensorStream s;
    s.name = "m";
    s.sample_period_ns = 1;
    s.channel_names = {"x"};

    auto with_validity = [&](std::vector<std::uint8_t> v) {
        s.validity = std::move(v);
        s.channels = {std::vector<double>(s.validity.size(), 0.0)};
        return detect_gaps(s);
    };

    CHECK(with_validity({1, 1, 1}).gaps.empty());
    CHECK(with_validity({1, 0, 0, 1, 0}).gaps ==
          std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 3}, {4, 5}});
    CHECK(with_validity({0, 0, 0, 0}).gaps ==
          std::vector<std::pair<std::int64_t, std::int64_t>>{{0, 4}});
    CHECK(with_validity({}).gaps.empty());
}

TEST_CASE("gap intervals partition exactly the invalid index set") {
    std::mt19937_64 rng(41);
    SensorStream s;
    s.name = "m";
    s.sample_period_ns = 1;
    s.channel_names = {"x"};
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng() % 200);
        s.validity.assign(static_cast<std::size_t>(n), 1);
        for (auto& v : s.validity) v = rng() % 3 ? 1 : 0;
        s.channels = {std::vector<double>(static_cast<std::size_t>(n), 0.0)};

        std::vector<std::uint8_t> covered(static_cast<std::size_t>(n), 0);
        std::int64_t prev_end = -1;
        for (const auto& [a, b] : detect_gaps(s).gaps) {
            CHECK(a > prev_end); // sorted, non-overlapping, non-adjacent
            CHECK(a < b);
            prev_end = b;
            for (std::int64_t i = a; i < b; ++i) covered[static_cast<std::size_t>(i)] = 1;
        }
        for (int i = 0; i < n; ++i) CHECK(covered[static_cast<std::size_t>(i)] == (s.validity[static_cast<std::size_t>(i)] ? 0 : 1));
    }
}
