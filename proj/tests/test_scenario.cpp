#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <pulsar/runner.hpp>
#include <pulsar/scenario.hpp>

using namespace pulsar;

namespace {

std::string scenario_dir() { return PULSAR_SCENARIO_DIR; }

std::string temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("pulsar_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename E, typename F>
void check_throws_containing(F&& fn, const std::string& needle) {
    try {
        fn();
        FAIL_CHECK("expected an exception mentioning '" << needle << "'");
    } catch (const E& e) {
        CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
}

} // namespace

TEST_CASE("minimal scenario gets the published defaults") {
    const auto cfg = parse_scenario_json(R"({
        "name": "tiny",
        "agents": [ {"name": "solo", "pool": 1, "pledge": 60000} ]
    })",
                                         "inline");
    CHECK(cfg.sim.protocol.t_target == 120);
    CHECK(cfg.sim.protocol.max_reorg_depth == 1000);
    CHECK(cfg.sim.protocol.incentive.k == 1000);
    CHECK(cfg.sim.protocol.incentive.a_num == 75'375'728);
    CHECK(cfg.sim.protocol.incentive.a_den == 1'000'000'000);
    CHECK(cfg.sim.protocol.slots_per_epoch == 432'000);
    CHECK(cfg.sim.protocol.alpha == parse_fixed_decimal("0.025"));
    CHECK(cfg.sim.protocol.total_supply == 600'000'000);
    // 0.01% min pledge applies once the ledger is built
    StakeLedger ledger(cfg.sim.protocol.total_supply, cfg.sim.protocol.incentive);
    CHECK(ledger.params().min_pledge == 60'000);
    CHECK(cfg.seeds == std::vector<uint64_t>{1});
}

TEST_CASE("scenario parse errors carry location and key context") {
    check_throws_containing<ConfigError>(
        [] { parse_scenario_json(R"({"name": "x", "bogus_key": 1})", "inline"); }, "unknown key 'bogus_key'");
    check_throws_containing<ConfigError>(
        [] { parse_scenario_json(R"({"name": "x", "network": {"delta_slots": -3}})", "inline"); },
        "delta_slots");
    check_throws_containing<ConfigError>(
        [] { parse_scenario_json("{\n  \"name\": \"x\",\n  broken\n}", "inline"); }, "line 3");
    check_throws_containing<ConfigError>(
        [] { parse_scenario_json(R"({"name": "x", "protocol": {"t_target": 0}})", "inline"); }, "t_target");
    check_throws_containing<ConfigError>(
        [] { parse_scenario_json(R"({"name": "x", "agents": [{"name": "a", "strategy": "steal"}]})", "inline"); },
        "unknown strategy");
    check_throws_containing<ConfigError>(
        [] {
            parse_scenario_json(
                R"({"name": "x", "protocol": {"total_supply": 100}, "agents": [{"name": "a", "pledge": 101}]})",
                "inline");
        },
        "stake more than");
}

TEST_CASE("checkpoint file parsing: happy path and malformed hex") {
    const auto dir = temp_dir("cp");
    const std::string good = dir + "/good.txt";
    {
        std::ofstream out(good);
        out << "# comment line\n";
        out << "2 " << std::string(64, 'a') << "\n";
        out << "7 " << std::string(64, '0') << "\n";
    }
    const auto cps = load_checkpoint_file(good);
    CHECK(cps.size() == 2);
    CHECK(cps.count(2) == 1);
    CHECK(cps.count(7) == 1);

    const std::string bad = dir + "/bad.txt";
    {
        std::ofstream out(bad);
        out << "2 zznothex\n";
    }
    check_throws_containing<ConfigError>([&] { load_checkpoint_file(bad); }, "bad.txt:1");

    CHECK_THROWS_AS(load_checkpoint_file(dir + "/missing.txt"), ConfigError);

    // round trip through the writer
    write_checkpoint_file(dir + "/out.txt", cps);
    CHECK(load_checkpoint_file(dir + "/out.txt") == cps);
}

TEST_CASE("fig1 fixture scenario: denser branch wins; checks pass") {
    auto cfg = load_scenario(scenario_dir() + "/fig1.json");
    RunOptions opts;
    opts.check = true;
    opts.no_timestamp = true;
    const auto out = run_scenario(cfg, temp_dir("fig1"), opts);
    CHECK(out.all_passed());
    CHECK(out.exit_code == 0);
    CHECK(out.summary.find("canonical branch A") != std::string::npos);
}

TEST_CASE("fig2 fixture scenario: one block flips the decision to B") {
    auto cfg = load_scenario(scenario_dir() + "/fig2.json");
    RunOptions opts;
    opts.check = true;
    opts.no_timestamp = true;
    const auto out = run_scenario(cfg, temp_dir("fig2"), opts);
    CHECK(out.all_passed());
    CHECK(out.summary.find("canonical branch A") != std::string::npos);
    CHECK(out.summary.find("after extra B block, canonical B") != std::string::npos);
}

TEST_CASE("fig3 fixture scenario: checkpoint-violating branch loses") {
    auto cfg = load_scenario(scenario_dir() + "/fig3.json");
    RunOptions opts;
    opts.check = true;
    opts.no_timestamp = true;
    const std::string dir = temp_dir("fig3");
    const auto out = run_scenario(cfg, dir, opts);
    CHECK(out.all_passed());

    // the resolved checkpoint file is written alongside the metrics
    const auto cps = load_checkpoint_file(dir + "/checkpoints_resolved.txt");
    CHECK(cps.size() == 1);
    // and the metrics name the reason branch B was excluded
    const std::string metrics = slurp(dir + "/metrics_fixture.jsonl");
    CHECK(metrics.find("misses checkpoint") != std::string::npos);
}

TEST_CASE("simulation runs write per-seed metrics and honor seed overrides") {
    ScenarioConfig cfg = parse_scenario_json(R"({
        "name": "micro",
        "protocol": {"t_target": 10, "min_pledge": 1000},
        "agents": [ {"name": "a", "pool": 1, "pledge": 3000000},
                    {"name": "b", "pool": 2, "pledge": 3000000} ],
        "run": {"slots": 2000, "seeds": [5]}
    })",
                                             "inline");
    RunOptions opts;
    opts.no_timestamp = true;
    opts.seed_override = {8, 9};
    const std::string dir = temp_dir("sim_seeds");
    const auto out = run_scenario(cfg, dir, opts);
    CHECK(out.exit_code == 0);
    CHECK(std::filesystem::exists(dir + "/metrics_8.jsonl"));
    CHECK(std::filesystem::exists(dir + "/metrics_9.jsonl"));
    CHECK_FALSE(std::filesystem::exists(dir + "/metrics_5.jsonl"));
    CHECK(std::filesystem::exists(dir + "/summary.txt"));
}

TEST_CASE("rerunning a scenario with the same seed is byte-identical") {
    ScenarioConfig cfg = parse_scenario_json(R"({
        "name": "det",
        "protocol": {"t_target": 15, "min_pledge": 1000},
        "network": {"delta_slots": 1},
        "agents": [ {"name": "a", "pool": 1, "pledge": 2000000},
                    {"name": "b", "pool": 2, "pledge": 4000000} ],
        "run": {"slots": 3000, "seeds": [21]}
    })",
                                             "inline");
    RunOptions opts;
    opts.no_timestamp = true;
    opts.trace = true;
    const std::string d1 = temp_dir("det1");
    const std::string d2 = temp_dir("det2");
    run_scenario(cfg, d1, opts);
    run_scenario(cfg, d2, opts);
    CHECK(slurp(d1 + "/metrics_21.jsonl") == slurp(d2 + "/metrics_21.jsonl"));
    CHECK(slurp(d1 + "/trace_21.jsonl") == slurp(d2 + "/trace_21.jsonl"));
    CHECK(slurp(d1 + "/summary.txt") == slurp(d2 + "/summary.txt"));
}

TEST_CASE("selection trace records per-tip trust") {
    ScenarioConfig cfg = parse_scenario_json(R"({
        "name": "traced",
        "protocol": {"t_target": 8, "min_pledge": 1000},
        "agents": [ {"name": "a", "pool": 1, "pledge": 3000000},
                    {"name": "b", "pool": 2, "pledge": 3000000} ],
        "run": {"slots": 400, "seeds": [3]}
    })",
                                             "inline");
    RunOptions opts;
    opts.no_timestamp = true;
    opts.trace = true;
    const std::string dir = temp_dir("trace");
    run_scenario(cfg, dir, opts);
    const std::string trace = slurp(dir + "/trace_3.jsonl");
    CHECK(trace.find("\"record\":\"slot\"") != std::string::npos);
    CHECK(trace.find("trust_raw") != std::string::npos);
    // one record per slot
    size_t lines = 0;
    for (char c : trace)
        if (c == '\n')
            ++lines;
    CHECK(lines == 400);
}

TEST_CASE("unwritable output directory fails without a partial summary") {
    ScenarioConfig cfg = parse_scenario_json(R"({
        "name": "io",
        "protocol": {"t_target": 10, "min_pledge": 1000},
        "agents": [ {"name": "a", "pool": 1, "pledge": 3000000} ],
        "run": {"slots": 100, "seeds": [1]}
    })",
                                             "inline");
    const std::string dir = temp_dir("io_fail");
    const std::string blocker = dir + "/blocker";
    { std::ofstream f(blocker); f << "x"; }
    RunOptions opts;
    opts.no_timestamp = true;
    CHECK_THROWS_AS(run_scenario(cfg, blocker + "/out", opts), std::runtime_error);
    CHECK_FALSE(std::filesystem::exists(blocker + "/out/summary.txt"));
}

TEST_CASE("ne sweep scenario produces a gated report") {
    auto cfg = load_scenario(scenario_dir() + "/ne_sweep.json");
    cfg.ne.rounds = 4000; // trimmed for unit-test speed
    RunOptions opts;
    opts.check = true;
    opts.no_timestamp = true;
    const std::string dir = temp_dir("ne");
    const auto out = run_scenario(cfg, dir, opts);
    CHECK(out.exit_code == 0);
    CHECK(out.all_passed());
    CHECK(std::filesystem::exists(dir + "/metrics_ne.jsonl"));
}

TEST_CASE("mev scaling scenario checks slope and ratio stabilization") {
    auto cfg = load_scenario(scenario_dir() + "/mev_scaling.json");

    RunOptions opts;
    opts.check = true;
    opts.no_timestamp = true;
    const auto out = run_scenario(cfg, temp_dir("mev"), opts);
    CHECK(out.exit_code == 0);
    CHECK(out.all_passed());
}
