#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "valleywalk/errors.hpp"
#include "valleywalk/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace valleywalk;

namespace {

Json base_config() {
    Json j;
    j["kind"] = "simulate";
    j["seed"] = 1234;
    j["model"] = {{"family", "beta"}, {"alpha", 3.0}, {"beta", 1.5}};
    j["n"] = 500;
    j["replicates"] = 16;
    return j;
}

} // namespace

TEST_CASE("kind strings round trip") {
    for (auto k : {ExperimentKind::LimitCheck, ExperimentKind::IglehartTail, ExperimentKind::ZTail,
                   ExperimentKind::ValleyStats, ExperimentKind::OccupationTail,
                   ExperimentKind::QuenchedGate, ExperimentKind::InterarrivalDiag,
                   ExperimentKind::GoodEnv, ExperimentKind::Simulate, ExperimentKind::Constants}) {
        CHECK(kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(kind_from_string("no_such_kind"), ConfigError);
}

TEST_CASE("config parsing fills defaults and re-embeds them") {
    auto cfg = parse_config(base_config());
    CHECK(cfg.kind == ExperimentKind::Simulate);
    CHECK(cfg.seed == 1234);
    CHECK(cfg.replicates == 16);
    CHECK(cfg.workers >= 1);
    CHECK(cfg.raw.contains("budget"));
    CHECK(cfg.raw.contains("fast"));
    CHECK(cfg.raw["workers"].get<int>() == cfg.workers);
    REQUIRE(cfg.ns.size() == 1);
    CHECK(cfg.ns[0] == 500);
}

TEST_CASE("config validation rejects malformed input") {
    auto ok = base_config();
    CHECK_NOTHROW(parse_config(ok));

    auto j = ok;
    j.erase("seed");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j.erase("model");
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j["replicates"] = 0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j["coffee"] = true; // unknown keys are configuration bugs, not extensions
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j["kind"] = "banana";
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j["left_mode"] = "sideways";
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j.erase("n"); // simulate needs a target site
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = ok;
    j["model"] = {{"family", "beta"}, {"alpha", 1.0}, {"beta", 2.0}}; // wrong drift
    CHECK_THROWS_AS(parse_config(j), NoRootError);
}

TEST_CASE("n accepts a scalar or an ascending array") {
    auto j = base_config();
    j["kind"] = "limit_check";
    j["n"] = {100, 1000, 10000};
    j["replicates"] = 8;
    auto cfg = parse_config(j);
    REQUIRE(cfg.ns.size() == 3);
    CHECK(cfg.ns[2] == 10000);
}

TEST_CASE("good-env config needs a usable ladder") {
    auto j = base_config();
    j["kind"] = "good_env";
    j.erase("n");
    j["ladder"] = {1000, 10000};
    j["replicates"] = 4;
    CHECK_NOTHROW(parse_config(j));
    j["ladder"] = Json::array();
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j["ladder"] = {10000, 1000}; // not increasing
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("digest is stable and sensitive") {
    auto a = parse_config(base_config());
    auto b = parse_config(base_config());
    auto r1 = run_experiment(a);
    auto r2 = run_experiment(b);
    CHECK(r1.digest == r2.digest);
    auto changed = base_config();
    changed["seed"] = 1235;
    auto r3 = run_experiment(parse_config(changed));
    CHECK(r3.digest != r1.digest);
}

TEST_CASE("simulate runs are reproducible across worker counts") {
    auto j = base_config();
    j["replicates"] = 24;
    j["workers"] = 1;
    auto one = run_experiment(parse_config(j));
    j["workers"] = 5;
    auto five = run_experiment(parse_config(j));

    REQUIRE(one.rows.size() == five.rows.size());
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        // wall_ms is wall-clock and legitimately differs; everything else is
        // a pure function of (seed, replicate)
        auto a = one.rows[i];
        auto b = five.rows[i];
        a.erase("wall_ms");
        b.erase("wall_ms");
        CHECK(a == b);
    }
    CHECK(one.summary == five.summary);
}

TEST_CASE("quenched gate passes on a healthy model") {
    Json j;
    j["kind"] = "quenched_gate";
    j["seed"] = 99;
    j["model"] = {{"family", "beta"}, {"alpha", 3.0}, {"beta", 1.5}};
    j["replicates"] = 100;
    j["tolerance"] = 1e-8;
    auto rec = run_experiment(parse_config(j));
    CHECK(rec.gates_passed);
    CHECK(rec.summary["gates"]["exit_within_tolerance"].get<bool>());
    CHECK(rec.summary["gates"]["mean_within_tolerance"].get<bool>());
    CHECK(rec.summary["gates"]["variance_within_tolerance"].get<bool>());
    CHECK(rec.summary["max_rel_err_exit"].get<double>() <= 1e-8);
}

TEST_CASE("constants run reports every estimator it can") {
    Json j;
    j["kind"] = "constants";
    j["seed"] = 5;
    j["model"] = {{"family", "beta"}, {"alpha", 2.8}, {"beta", 1.2}};
    j["effort"] = 30000;
    auto rec = run_experiment(parse_config(j));
    CHECK(rec.gates_passed);
    CHECK(rec.summary.contains("kappa"));
    CHECK(rec.summary.contains("c_u"));
    CHECK(rec.summary.contains("c_t"));
    CHECK(rec.summary["c_k_methods"].contains("beta_closed_form"));
    CHECK(rec.summary["c_k_methods"].contains("tail_regression"));
}

TEST_CASE("output files land with their schema headers") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "valleywalk_test_out";
    fs::remove_all(dir);

    auto cfg = parse_config(base_config());
    auto rec = run_experiment(cfg);
    write_outputs(rec, dir.string());

    auto jsonl = dir / "simulate_replicates.jsonl";
    auto csv = dir / "simulate_summary.csv";
    auto runj = dir / "simulate_run.json";
    REQUIRE(fs::exists(jsonl));
    REQUIRE(fs::exists(csv));
    REQUIRE(fs::exists(runj));

    std::ifstream jf(jsonl);
    std::string header;
    std::getline(jf, header);
    auto hj = Json::parse(header);
    CHECK(hj["schema"] == "valleywalk.replicates.v1");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(jf, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 16);

    std::ifstream cf(csv);
    std::getline(cf, header);
    CHECK(header.find("valleywalk.summary.v1") != std::string::npos);

    std::ifstream rf(runj);
    Json run = Json::parse(rf);
    CHECK(run["schema"] == "valleywalk.run.v1");
    CHECK(run["config"]["seed"].get<std::uint64_t>() == 1234);
    CHECK(run["digest"] == rec.digest);
    fs::remove_all(dir);
}

TEST_CASE("interarrival config rejects indices below one") {
    Json j;
    j["kind"] = "interarrival";
    j["seed"] = 4;
    j["model"] = {{"family", "beta"}, {"alpha", 1.5, }, {"beta", 1.0}}; // kappa = 0.5
    j["n"] = {100, 1000};
    j["replicates"] = 4;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}
