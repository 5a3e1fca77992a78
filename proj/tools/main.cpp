// ticksync command line: sync, merge, simulate-clock, generate-fixture.
// Exit codes: 0 success, 1 input or processing error, 2 ambiguous result.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ticksync/align.hpp"
#include "ticksync/clocksim.hpp"
#include "ticksync/errors.hpp"
#include "ticksync/eventsync.hpp"
#include "ticksync/fixture.hpp"
#include "ticksync/ingest.hpp"
#include "ticksync/timeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ticksync::Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ticksync::Error("cannot write " + path.string());
    out << content;
}

fs::path sibling_with_suffix(const fs::path& path, const std::string& suffix) {
    fs::path p = path;
    p.replace_extension();
    p += suffix;
    return p;
}

struct SyncOptions {
    std::string game_path;
    std::string mouse_path;
    std::string player;
    int min_events = ticksync::kDefaultMinEvents;
    std::string out_path;
};

int cmd_sync(const SyncOptions& opt) {
    const auto game = ticksync::parse_game_events(read_file(opt.game_path));
    const auto mouse =
        ticksync::parse_sensor_csv(read_file(opt.mouse_path), fs::path(opt.mouse_path).stem().string());

    const auto fire = ticksync::extract_fire_series(game, opt.player);
    const auto presses = ticksync::extract_lmb_series(mouse, game.tickrate);
    const auto est = ticksync::estimate_shift(fire, presses, opt.min_events);

    std::uint64_t press_count = 0;
    for (auto b : presses.bits()) press_count += b;

    ordered_json report;
    report["player"] = opt.player;
    report["shift_ticks"] = est.shift;
    report["match_count"] = est.match_count;
    report["runner_up_count"] = est.runner_up_count;
    report["tie_count"] = est.tie_count;
    report["confidence"] = est.confidence;
    report["anchor_utc_of_tick0"] = ticksync::to_rfc3339(est.anchor_utc_of_tick0);
    report["rate"] = {{"num", game.tickrate.num()}, {"den", game.tickrate.den()}};
    report["mouse_start"] = ticksync::to_rfc3339(presses.start());
    report["fire_events"] = fire.event_ticks().size();
    report["pressed_samples"] = press_count;
    write_file(opt.out_path, report.dump(2) + "\n");

    if (est.tie_count != 1) {
        std::cerr << "ambiguous shift: " << est.tie_count << " candidates share "
                  << est.match_count << " matches\n";
        return 2;
    }
    return 0;
}

struct MergeOptions {
    std::string shift_report_path;
    std::vector<std::string> stream_paths;
    std::string game_path;
    std::vector<std::string> event_names;
    std::string out_path;
    std::string report_path;
};

int cmd_merge(const MergeOptions& opt) {
    ordered_json shift_report;
    try {
        shift_report = ordered_json::parse(read_file(opt.shift_report_path));
    } catch (const nlohmann::json::exception& e) {
        throw ticksync::SchemaError("bad shift report: " + std::string(e.what()));
    }
    for (const char* key :
         {"player", "shift_ticks", "anchor_utc_of_tick0", "rate", "mouse_start", "match_count"})
        if (!shift_report.contains(key))
            throw ticksync::SchemaError("shift report misses key '" + std::string(key) + "'");

    const auto game = ticksync::parse_game_events(read_file(opt.game_path));
    std::vector<ticksync::SensorStream> streams;
    for (const auto& path : opt.stream_paths)
        streams.push_back(ticksync::parse_sensor_csv(read_file(path), fs::path(path).stem().string()));
    if (streams.empty()) throw ticksync::Error("merge needs at least one stream");

    const ticksync::Rate rate(shift_report["rate"]["num"].get<std::int64_t>(),
                              shift_report["rate"]["den"].get<std::int64_t>());
    if (!(rate == game.tickrate))
        throw ticksync::RateMismatch("shift report rate does not match the game log tickrate");
    ticksync::ShiftEstimate est;
    est.shift = shift_report["shift_ticks"].get<std::int64_t>();
    est.match_count = shift_report["match_count"].get<std::uint64_t>();
    est.tie_count = shift_report.value("tie_count", std::uint64_t{1});
    est.runner_up_count = shift_report.value("runner_up_count", std::uint64_t{0});
    est.confidence = shift_report.value("confidence", 0.0);
    est.anchor_utc_of_tick0 =
        ticksync::parse_rfc3339(shift_report["anchor_utc_of_tick0"].get<std::string>());

    const auto mouse_start =
        ticksync::parse_rfc3339(shift_report["mouse_start"].get<std::string>());
    const std::string player = shift_report["player"].get<std::string>();

    // The stream carrying an lmb channel doubles as the anchor reference.
    const ticksync::SensorStream* mouse = nullptr;
    for (const auto& stream : streams)
        if (stream.channel("lmb")) { mouse = &stream; break; }
    const ticksync::AnchoredBinarySeries g_meta =
        mouse ? ticksync::extract_lmb_series(*mouse, rate)
              : ticksync::AnchoredBinarySeries(mouse_start, rate, {});

    const auto merged = ticksync::merge(streams, game, est, g_meta, opt.event_names);
    const auto coverage = ticksync::coverage_report(merged);

    ordered_json report;
    report["shift_ticks"] = est.shift;
    report["grid_start"] = ticksync::to_rfc3339(merged.grid_start);
    report["rows"] = merged.size();
    ordered_json columns = ordered_json::array();
    for (const auto& column : coverage.columns) {
        ordered_json c;
        c["name"] = column.name;
        c["measured_fraction"] = column.measured_fraction;
        ordered_json gaps = ordered_json::array();
        for (const auto& [a, b] : column.gap_intervals) gaps.push_back({a, b});
        c["gap_intervals"] = std::move(gaps);
        columns.push_back(std::move(c));
    }
    report["columns"] = std::move(columns);
    ordered_json pairs = ordered_json::array();
    for (std::size_t a = 0; a < coverage.columns.size(); ++a)
        for (std::size_t b = 0; b < coverage.columns.size(); ++b) {
            if (a == b) continue;
            ordered_json p;
            p["a"] = coverage.columns[a].name;
            p["b"] = coverage.columns[b].name;
            p["covered_fraction"] = coverage.pair_covered[a][b];
            pairs.push_back(std::move(p));
        }
    report["pair_coverage"] = std::move(pairs);

    if (mouse) {
        const auto fire = ticksync::extract_fire_series(game, player);
        const auto match = ticksync::match_report(fire, g_meta, est);
        ordered_json m;
        m["matched"] = match.matched;
        m["unmatched_fire"] = match.unmatched_fire;
        m["spurious_presses"] = match.spurious_presses;
        report["match"] = std::move(m);
    } else {
        report["match"] = nullptr;
    }

    write_file(opt.out_path, ticksync::serialize_merged_csv(merged));
    write_file(opt.report_path.empty() ? sibling_with_suffix(opt.out_path, ".report.json")
                                       : fs::path(opt.report_path),
               report.dump(2) + "\n");
    return 0;
}

struct SimulateOptions {
    double drift_ms_per_hour = 0.0;
    std::optional<std::int64_t> interval_s;
    bool no_discipline = false;
    std::string mode = "step";
    double slew_us_per_s = 500.0;
    double jitter_us = 0.0;
    double error_us = 0.0;
    double initial_offset_ms = 0.0;
    double hours = 0.0;
    double sample_period_s = 1.0;
    double discard_s = 0.0;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string stats_path;
};

int cmd_simulate_clock(const SimulateOptions& opt) {
    if (opt.interval_s && opt.no_discipline)
        throw ticksync::Error("--interval-s and --no-discipline are mutually exclusive");

    ticksync::ClockModel model;
    model.initial_offset_ns = std::llround(opt.initial_offset_ms * 1e6);
    model.drift = ticksync::NsPerSec::from_ms_per_hour(opt.drift_ms_per_hour);
    model.jitter_stddev_ns = std::llround(opt.jitter_us * 1e3);
    model.seed = opt.seed;

    std::optional<ticksync::DisciplinePolicy> policy;
    if (opt.interval_s) {
        ticksync::DisciplinePolicy p;
        p.correction_interval_ns = *opt.interval_s * 1'000'000'000;
        p.mode = opt.mode == "slew" ? ticksync::CorrectionMode::slew : ticksync::CorrectionMode::step;
        p.slew_rate_limit = ticksync::NsPerSec{std::llround(opt.slew_us_per_s * 1e3), 1};
        p.measurement_error_stddev_ns = std::llround(opt.error_us * 1e3);
        policy = p;
    }

    const std::int64_t duration_ns = std::llround(opt.hours * 3.6e12);
    const std::int64_t sample_period_ns = std::llround(opt.sample_period_s * 1e9);
    const auto trace = ticksync::simulate(model, policy, duration_ns, sample_period_ns);
    const auto stats = ticksync::accuracy_stats(trace, std::llround(opt.discard_s * 1e9));

    ordered_json j;
    j["samples"] = trace.offsets_ns.size();
    j["sample_period_ns"] = trace.sample_period_ns;
    j["discard_initial_ns"] = std::llround(opt.discard_s * 1e9);
    j["max_abs_ns"] = stats.max_abs_ns;
    j["mean_abs_ns"] = stats.mean_abs_ns;
    j["rms_ns"] = stats.rms_ns;
    j["final_offset_ns"] = trace.offsets_ns.back();

    write_file(opt.out_path, ticksync::serialize_offset_trace(trace));
    write_file(opt.stats_path.empty() ? sibling_with_suffix(opt.out_path, ".stats.json")
                                      : fs::path(opt.stats_path),
               j.dump(2) + "\n");
    return 0;
}

struct FixtureOptions {
    ticksync::FixtureSpec spec;
    std::string out_dir;
};

int cmd_generate_fixture(const FixtureOptions& opt) {
    const auto fixture = ticksync::generate_fixture(opt.spec);
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "mouse.csv", fixture.mouse_csv);
    write_file(fs::path(opt.out_dir) / "imu.csv", fixture.imu_csv);
    write_file(fs::path(opt.out_dir) / "game.jsonl", fixture.game_jsonl);
    write_file(fs::path(opt.out_dir) / "truth.json", fixture.truth_json);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ticksync: anchor tick-indexed game logs in UTC via mouse-press matching,\n"
                 "merge sensor streams onto a common grid, and simulate clock drift."};
    app.require_subcommand(1);

    SyncOptions sync_opt;
    auto* sync = app.add_subcommand("sync", "recover the game-log shift against a mouse log");
    sync->add_option("--game", sync_opt.game_path, "game event log (JSON lines)")->required();
    sync->add_option("--mouse", sync_opt.mouse_path, "mouse sensor CSV")->required();
    sync->add_option("--player", sync_opt.player, "player id to match")->required();
    sync->add_option("--min-events", sync_opt.min_events, "minimum fire events required");
    sync->add_option("--out", sync_opt.out_path, "shift report JSON path")->required();

    MergeOptions merge_opt;
    auto* merge = app.add_subcommand("merge", "merge streams and the anchored game log");
    merge->add_option("--shift-report", merge_opt.shift_report_path, "sync output JSON")->required();
    merge->add_option("--stream", merge_opt.stream_paths, "sensor CSV (repeatable)")->required();
    merge->add_option("--game", merge_opt.game_path, "game event log (JSON lines)")->required();
    merge->add_option("--event", merge_opt.event_names, "event names to emit (default: all)");
    merge->add_option("--out", merge_opt.out_path, "merged CSV path")->required();
    merge->add_option("--report", merge_opt.report_path,
                      "coverage/match JSON path (default: <out>.report.json)");

    SimulateOptions sim_opt;
    auto* sim = app.add_subcommand("simulate-clock", "simulate a drifting, disciplined clock");
    sim->add_option("--drift-ms-per-hour", sim_opt.drift_ms_per_hour, "clock drift")->required();
    auto* interval = sim->add_option("--interval-s", sim_opt.interval_s, "correction interval");
    sim->add_flag("--no-discipline", sim_opt.no_discipline, "free-running clock")
        ->excludes(interval);
    sim->add_option("--mode", sim_opt.mode, "correction mode")
        ->check(CLI::IsMember({"step", "slew"}));
    sim->add_option("--slew-us-per-s", sim_opt.slew_us_per_s, "slew rate limit");
    sim->add_option("--jitter-us", sim_opt.jitter_us, "reading noise stddev");
    sim->add_option("--error-us", sim_opt.error_us, "correction measurement error stddev");
    sim->add_option("--initial-offset-ms", sim_opt.initial_offset_ms, "offset at t=0");
    sim->add_option("--hours", sim_opt.hours, "simulated duration")->required();
    sim->add_option("--sample-period-s", sim_opt.sample_period_s, "trace sampling period");
    sim->add_option("--discard-s", sim_opt.discard_s, "transient window excluded from stats");
    sim->add_option("--seed", sim_opt.seed, "noise seed");
    sim->add_option("--out", sim_opt.out_path, "offset trace CSV path")->required();
    sim->add_option("--stats-out", sim_opt.stats_path, "stats JSON path");

    FixtureOptions fix_opt;
    auto* fix = app.add_subcommand("generate-fixture", "write a synthetic session");
    fix->add_option("--seed", fix_opt.spec.seed, "generator seed");
    fix->add_option("--shift-ticks", fix_opt.spec.shift_ticks, "true shift")->required();
    fix->add_option("--fires", fix_opt.spec.fires, "weapon fire count");
    fix->add_option("--dropout", fix_opt.spec.dropout, "fraction of presses missing");
    fix->add_option("--spurious", fix_opt.spec.spurious, "extra presses");
    fix->add_option("--gaps", fix_opt.spec.gaps, "coordinate dropout intervals");
    fix->add_option("--game-ticks", fix_opt.spec.game_ticks, "game horizon M");
    fix->add_option("--mouse-samples", fix_opt.spec.mouse_samples, "mouse sample count N");
    fix->add_option("--clock-error-ms", fix_opt.spec.clock_error_ms, "per-stream clock error bound");
    fix->add_option("--press-max-ticks", fix_opt.spec.press_max_ticks, "longest press hold");
    fix->add_option("--player", fix_opt.spec.player, "player id");
    fix->add_option("--out-dir", fix_opt.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sync->parsed()) return cmd_sync(sync_opt);
        if (merge->parsed()) return cmd_merge(merge_opt);
        if (sim->parsed()) return cmd_simulate_clock(sim_opt);
        if (fix->parsed()) return cmd_generate_fixture(fix_opt);
    } catch (const ticksync::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
