#include <doctest.h>

#include <cmath>
#include <random>

#include "ticksync/align.hpp"
#include "ticksync/errors.hpp"

using namespace ticksync;

namespace {

constexpr std::int64_t kTick = 7'812'500;

SensorStream grid_stream(std::string name, std::int64_t start_ns, std::vector<double> values) {
    SensorStream s;
    s.name = std::move(name);
    s.sample_period_ns = kTick;
    s.start = UtcInstant{start_ns};
    s.channel_names = {"v"};
    s.validity.assign(values.size(), 1);
    s.channels = {std::move(values)};
    return s;
}

ShiftEstimate estimate_with(std::int64_t shift, const AnchoredBinarySeries& g) {
    ShiftEstimate est;
    est.shift = shift;
    est.anchor_utc_of_tick0 = sample_index_to_utc(g, shift);
    est.tie_count = 1;
    return est;
}

} // namespace

TEST_CASE("merging one on-grid stream reproduces it") {
    const auto stream = grid_stream("s", 0, {1.0, 2.0, 3.0, 4.0});
    GameEventLog game;
    game.horizon = 4;
    game.events = {GameEvent{1, "weapon_fire", {}}};
    const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), {0, 1, 0, 0});
    const auto est = estimate_with(0, g);

    const auto merged = merge({stream}, game, est, g);
    CHECK(merged.size() == 4);
    CHECK(merged.grid_start.ns == 0);
    const auto* v = merged.column("s.v");
    REQUIRE(v != nullptr);
    CHECK(v->values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    for (auto p : v->prov) CHECK(p == Provenance::measured);
}

TEST_CASE("an anchored fire lands at grid index five") {
    const auto stream = grid_stream("s", 0, std::vector<double>(12, 0.5));
    GameEventLog game;
    game.horizon = 3;
    game.events = {GameEvent{0, "weapon_fire", {}}};
    const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), std::vector<std::uint8_t>(12, 0));
    const auto est = estimate_with(5, g);

    const auto merged = merge({stream}, game, est, g);
    const auto* fire = merged.column("weapon_fire");
    REQUIRE(fire != nullptr);
    CHECK(fire->values[5] == 1.0);
    CHECK(fire->prov[5] == Provenance::measured);
    CHECK(fire->values[6] == 0.0);
    CHECK(fire->prov[4] == Provenance::out_of_range); // before the game started
}

TEST_CASE("off-grid numeric samples match a direct nearest-bin oracle") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 30; ++trial) {
        SensorStream s;
        s.name = "imu";
        s.sample_period_ns = 9'000'000 + static_cast<std::int64_t>(rng() % 4'000'000);
        s.start = UtcInstant{static_cast<std::int64_t>(rng() % 20'000'000)};
        s.channel_names = {"a"};
        const int n = 20 + static_cast<int>(rng() % 40);
        s.channels.resize(1);
        for (int i = 0; i < n; ++i) {
            s.validity.push_back(1);
            s.channels[0].push_back(static_cast<double>(i));
        }

        GameEventLog game;
        game.horizon = 1;
        const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), {1});
        const auto merged = merge({s}, game, estimate_with(0, g), g);
        const auto* col = merged.column("imu.a");
        REQUIRE(col != nullptr);

        // oracle: per bin, the nearest valid sample (ties to the earlier one)
        for (std::int64_t b = 0; b < merged.size(); ++b) {
            const std::int64_t instant = merged.grid_start.ns + b * kTick;
            double best_value = std::numeric_limits<double>::quiet_NaN();
            std::int64_t best_dist = kTick / 2 + 1;
            for (int i = 0; i < n; ++i) {
                const std::int64_t t = s.start.ns + i * s.sample_period_ns;
                const std::int64_t dist = std::abs(t - instant);
                // a sample belongs to this bin iff this is its nearest bin
                const std::int64_t half = kTick / 2;
                const std::int64_t rel = t - merged.grid_start.ns;
                std::int64_t q = rel / kTick;
                std::int64_t r = rel % kTick;
                if (r < 0) { q -= 1; r += kTick; }
                const std::int64_t bin = r * 2 > kTick ? q + 1 : q;
                (void)half;
                if (bin != b) continue;
                if (dist < best_dist) {
                    best_dist = dist;
                    best_value = s.channels[0][static_cast<std::size_t>(i)];
                }
            }
            if (std::isnan(best_value)) {
                CHECK(col->prov[static_cast<std::size_t>(b)] != Provenance::measured);
            } else {
                CHECK(col->values[static_cast<std::size_t>(b)] == best_value);
            }
        }
    }
}

TEST_CASE("the grid spans the union of stream extents") {
    // stream a covers bins 0..3, stream b (100 Hz, off-phase) trails it
    const auto a = grid_stream("a", 0, {1.0, 2.0, 3.0, 4.0});
    SensorStream b;
    b.name = "b";
    b.sample_period_ns = 10'000'000;
    b.start = UtcInstant{20 * kTick + 1'000'000};
    b.channel_names = {"w"};
    b.channels = {{5.0, 6.0, 7.0}};
    b.validity = {1, 1, 1};

    GameEventLog game;
    game.horizon = 2;
    const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), {1, 0});
    const auto merged = merge({a, b}, game, estimate_with(0, g), g);

    const std::int64_t last_b_bin = (b.start.ns + 2 * b.sample_period_ns + kTick / 2) / kTick;
    CHECK(merged.grid_start.ns == 0);
    CHECK(merged.size() == last_b_bin + 1);

    const auto* av = merged.column("a.v");
    const auto* bw = merged.column("b.w");
    REQUIRE(av != nullptr);
    REQUIRE(bw != nullptr);
    CHECK(av->prov[0] == Provenance::measured);
    CHECK(av->prov[5] == Provenance::out_of_range);
    CHECK(bw->prov[0] == Provenance::out_of_range);
    CHECK(bw->prov[static_cast<std::size_t>(last_b_bin)] == Provenance::measured);
    CHECK(bw->values[static_cast<std::size_t>(last_b_bin)] == 7.0);
}

TEST_CASE("merge flags invalid samples as gaps and never invents data") {
    SensorStream s = grid_stream("m", 0, {1.0, 2.0, 3.0, 4.0, 5.0});
    s.validity = {1, 0, 0, 1, 1};
    s.channels[0][1] = std::numeric_limits<double>::quiet_NaN();
    s.channels[0][2] = std::numeric_limits<double>::quiet_NaN();
    GameEventLog game;
    game.horizon = 2;
    const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), {1, 0, 0, 0, 0});
    const auto merged = merge({s}, game, estimate_with(0, g), g);

    const auto* col = merged.column("m.v");
    REQUIRE(col != nullptr);
    CHECK(col->prov[1] == Provenance::gap);
    CHECK(col->prov[2] == Provenance::gap);
    CHECK(std::isnan(col->values[1]));
    for (std::size_t i = 0; i < col->values.size(); ++i)
        if (col->prov[i] == Provenance::measured)
            CHECK((col->values[i] == 1.0 || col->values[i] == 4.0 || col->values[i] == 5.0));
}

TEST_CASE("merge is idempotent in content") {
    const auto stream = grid_stream("s", 3'906'250, {7.0, 8.0, 9.0});
    GameEventLog game;
    game.horizon = 4;
    game.events = {GameEvent{2, "weapon_fire", {}}};
    const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), {1, 0, 0, 0});
    const auto a = merge({stream}, game, estimate_with(1, g), g);
    const auto b = merge({stream}, game, estimate_with(1, g), g);
    CHECK(a == b);
}

TEST_CASE("a binary channel slower than the grid is a rate mismatch") {
    SensorStream s;
    s.name = "slow";
    s.sample_period_ns = 10'000'000; // 100 Hz
    s.start = UtcInstant{0};
    s.channel_names = {"btn"};
    s.channels = {{0.0, 1.0, 0.0}};
    s.validity = {1, 1, 1};
    GameEventLog game;
    game.horizon = 1;
    const AnchoredBinarySeries g(UtcInstant{0}, Rate(128), {1});
    CHECK_THROWS_AS(merge({s}, game, estimate_with(0, g), g), RateMismatch);
}

TEST_CASE("match_report separates matches, misses and extras") {
    const Rate r(128);
    SUBCASE("noise-free embedding has no unmatched fires") {
        const TickEventSeries fire(r, {2, 5, 9}, 12);
        std::vector<std::uint8_t> bits(20, 0);
        bits[2 + 4] = bits[5 + 4] = bits[9 + 4] = 1;
        const AnchoredBinarySeries g(UtcInstant{0}, r, bits);
        const auto report = match_report(fire, g, estimate_with(4, g));
        CHECK(report.matched == 3);
        CHECK(report.unmatched_fire.empty());
        CHECK(report.spurious_presses == 0);
    }
    SUBCASE("extra presses are spurious but fires still match") {
        const TickEventSeries fire(r, {2, 5}, 8);
        std::vector<std::uint8_t> bits(16, 0);
        bits[2] = bits[5] = 1;
        bits[11] = bits[12] = 1;
        const AnchoredBinarySeries g(UtcInstant{0}, r, bits);
        const auto report = match_report(fire, g, estimate_with(0, g));
        CHECK(report.matched == 2);
        CHECK(report.unmatched_fire.empty());
        CHECK(report.spurious_presses == 2);
    }
    SUBCASE("a wrong shift shows up as unmatched fires") {
        const TickEventSeries fire(r, {2, 5, 9}, 12);
        std::vector<std::uint8_t> bits(20, 0);
        bits[2] = bits[5] = bits[9] = 1;
        const AnchoredBinarySeries g(UtcInstant{0}, r, bits);
        const auto report = match_report(fire, g, estimate_with(3, g));
        CHECK(report.matched < 3);
        CHECK(!report.unmatched_fire.empty());
    }
}

TEST_CASE("coverage_report fractions and pair statistics") {
    MergedDataset dataset;
    dataset.grid_start = UtcInstant{0};
    dataset.grid_rate = Rate(128);

    MergedColumn mouse;
    mouse.name = "mouse.x";
    mouse.values = {1, 1, std::nan(""), std::nan(""), 1, 1, 1, std::nan(""), 1, 1};
    mouse.prov.assign(10, Provenance::measured);
    mouse.prov[2] = mouse.prov[3] = mouse.prov[7] = Provenance::gap;

    MergedColumn imu;
    imu.name = "imu.ax";
    imu.values.assign(10, 2.0);
    imu.prov.assign(10, Provenance::measured);

    dataset.columns = {mouse, imu};
    const auto report = coverage_report(dataset);

    CHECK(report.columns[0].measured_fraction == doctest::Approx(0.7));
    CHECK(report.columns[0].gap_intervals ==
          std::vector<std::pair<std::int64_t, std::int64_t>>{{2, 4}, {7, 8}});
    CHECK(report.columns[1].measured_fraction == 1.0);
    CHECK(report.columns[1].gap_intervals.empty());
    CHECK(report.pair_covered[0][1] == 1.0); // imu covers every mouse gap
    CHECK(report.pair_covered[1][0] == 1.0); // vacuous: imu has no gaps

    SUBCASE("disjoint gaps against a counting oracle") {
        dataset.columns[1].prov[7] = Provenance::gap;
        dataset.columns[1].prov[8] = Provenance::gap;
        dataset.columns[1].values[7] = dataset.columns[1].values[8] = std::nan("");
        const auto r2 = coverage_report(dataset);
        // mouse gaps: {2,3,7}; imu measured there: {2,3} -> 2/3
        CHECK(r2.pair_covered[0][1] == doctest::Approx(2.0 / 3.0));
        // imu gaps: {7,8}; mouse measured there: {8} -> 1/2
        CHECK(r2.pair_covered[1][0] == doctest::Approx(0.5));
    }
}

TEST_CASE("merged csv round-trips") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        MergedDataset d;
        d.grid_start = UtcInstant{static_cast<std::int64_t>(rng() % 1'000'000'000'000ULL)};
        d.grid_rate = Rate(128);
        const int cols = 1 + static_cast<int>(rng() % 4);
        const int rows = 1 + static_cast<int>(rng() % 30);
        for (int c = 0; c < cols; ++c) {
            MergedColumn col;
            col.name = "c" + std::to_string(c);
            for (int i = 0; i < rows; ++i) {
                const int kind = static_cast<int>(rng() % 4);
                if (kind == 0) {
                    col.values.push_back(std::numeric_limits<double>::quiet_NaN());
                    col.prov.push_back(rng() % 2 ? Provenance::gap : Provenance::out_of_range);
                } else {
                    col.values.push_back(static_cast<double>(static_cast<std::int64_t>(rng() % 100000)) / 64.0);
                    col.prov.push_back(Provenance::measured);
                }
            }
            d.columns.push_back(std::move(col));
        }
        CHECK(parse_merged_csv(serialize_merged_csv(d)) == d);
    }

    SUBCASE("parser rejects malformed documents") {
        CHECK_THROWS_AS(parse_merged_csv(""), SchemaError);
        CHECK_THROWS_AS(parse_merged_csv("# sample_period_ns=7812500\n"
                                         "timestamp,a,b_prov\n"),
                        SchemaError); // prov name mismatch
        CHECK_THROWS_AS(parse_merged_csv("# sample_period_ns=7812500\n"
                                         "timestamp,a,a_prov\n"
                                         "2020-01-01T00:00:00Z,1,X\n"),
                        SchemaError); // bad provenance code
        CHECK_THROWS_AS(parse_merged_csv("# sample_period_ns=7812500\n"
                                         "timestamp,a,a_prov\n"
                                         "2020-01-01T00:00:00Z,1,G\n"),
                        SchemaError); // gap cell must be empty
    }
}
