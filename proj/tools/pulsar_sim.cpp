// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// Batch experiment driver: loads a scenario description, runs it over the
// configured seeds, and writes machine-readable metrics plus a summary
// table into the output directory.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <pulsar/runner.hpp>
#include <pulsar/scenario.hpp>

int main(int argc, char** argv) {
    CLI::App app{"pulsar-sim: deterministic proof-of-stake consensus simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute a scenario and write metrics");
    std::string scenario_path;
    std::string output_dir = "out";
    std::vector<uint64_t> seeds;
    pulsar::RunOptions opts;
    run->add_option("-s,--scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("-o,--out", output_dir, "output directory (created if missing)");
    run->add_option("--seeds", seeds, "override the scenario seed list");
    run->add_flag("--check", opts.check, "exit nonzero if any scenario check fails");
    run->add_flag("--trace", opts.trace, "write a per-slot selection trace");
    run->add_flag("-q,--quiet", opts.quiet, "suppress console output");
    run->add_flag("--no-timestamp", opts.no_timestamp, "omit the timestamped header line");

    CLI11_PARSE(app, argc, argv);

    try {
        pulsar::ScenarioConfig cfg = pulsar::load_scenario(scenario_path);
        opts.seed_override = seeds;
        const pulsar::RunOutcome outcome = pulsar::run_scenario(std::move(cfg), output_dir, opts);
        if (!opts.quiet)
            std::fputs(outcome.summary.c_str(), stdout);
        return outcome.exit_code;
    } catch (const pulsar::ConfigError& e) {
        std::fprintf(stderr, "scenario error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
