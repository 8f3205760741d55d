// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_RUNNER_HPP
#define PULSAR_RUNNER_HPP

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chain_select.hpp"
#include "scenario.hpp"
#include "sim.hpp"

namespace pulsar {

struct RunOptions {
    std::vector<uint64_t> seed_override;
    bool check = false;     // gate the exit status on scenario checks
    bool trace = false;     // emit per-slot selection trace
    bool quiet = false;
    bool no_timestamp = false; // suppress the timestamped header line
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunOutcome {
    std::vector<CheckResult> checks;
    std::string summary;
    int exit_code = 0;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed)
                return false;
        return true;
    }
};

namespace rundetail {

inline void append_check(RunOutcome& out, std::string name, bool passed, std::string detail) {
    out.checks.push_back({std::move(name), passed, std::move(detail)});
}

inline std::string fixed_str(fixed128 v) {
    // integer.16-hex-digit fraction; exact and stable across platforms
    std::ostringstream s;
    s << v.int_part() << "+0x";
    const char* digits = "0123456789abcdef";
    const uint64_t frac = v.frac_part();
    for (int i = 60; i >= 0; i -= 4)
        s << digits[(frac >> i) & 0xf];
    s << "/2^64";
    return s.str();
}

inline ordered_json metrics_to_json(const RunMetrics& m, uint64_t seed) {
    ordered_json j;
    j["record"] = "run_summary";
    j["seed"] = seed;
    j["final_height"] = m.final_canonical_height;
    j["final_tip"] = m.final_canonical_tip;
    j["final_tau"] = fixed_str(m.final_tau);
    j["trailing_mean_interval"] = fixed_str(m.trailing_mean_interval);
    j["competing_heights"] = m.competing_heights;
    j["observed_heights"] = m.observed_heights;
    j["epsilon_cons_millionths"] =
        m.observed_heights == 0 ? 0 : (m.competing_heights * 1'000'000) / m.observed_heights;
    j["max_reorg_depth_seen"] = m.max_reorg_depth_seen;
    j["duplicate_signature_rejections"] = m.duplicate_signature_rejections;
    j["blocks_produced"] = ordered_json::object();
    for (const auto& [agent, n] : m.blocks_produced)
        j["blocks_produced"][agent] = n;
    j["blocks_canonical"] = ordered_json::object();
    for (const auto& [agent, n] : m.blocks_canonical)
        j["blocks_canonical"][agent] = n;
    j["utilities"] = ordered_json::object();
    for (const auto& [account, u] : m.utilities)
        j["utilities"][account] = u;
    j["rejections"] = ordered_json::object();
    for (const auto& [reason, n] : m.rejections_by_reason)
        j["rejections"][reason] = n;
    j["reorg_histogram"] = ordered_json::object();
    for (const auto& [depth, n] : m.reorg_depth_histogram)
        j["reorg_histogram"][std::to_string(depth)] = n;
    const uint32_t final_heads = m.head_count_by_slot.empty() ? 1 : m.head_count_by_slot.back();
    j["final_head_count"] = final_heads;
    return j;
}

// --- fork fixtures ----------------------------------------------------------

struct FixtureChains {
    ChainState state;
    SelectionParams params;
    digest256 a_tip, b_tip;
    std::map<uint64_t, digest256> resolved_checkpoints;
    std::vector<digest256> prefix_path; // genesis + prefix blocks by height
};

// Build the captioned two-branch layouts through the full validation
// pipeline: one always-leader pool signs every block.
class FixtureBuilder {
public:
    explicit FixtureBuilder(const ProtocolParams& proto) : proto_(proto) {
        sig_ = keypair_from_seed(0xf1);
        vrf_ = keypair_from_seed(0xf2);
        registry_key_.register_keypair(sig_);
        PoolEntry entry;
        entry.sig_pk = sig_.pk;
        entry.vrf_pk = vrf_.pk;
        entry.weight_q64 = UINT64_MAX; // saturated weight; tau * w >= 1
        pools_.emplace(kFixturePool, entry);
        genesis_seed_ = Hasher{}.update("pulsar.genesis.seed").finish();

        Block genesis;
        genesis.header.merkle_root = body_merkle_root(genesis.body);
        genesis.header.witness_merkle_root = body_witness_root(genesis.body);
        genesis.id = header_id(genesis.header);
        genesis_ = genesis;
    }

    FixtureChains build(const ForkFixture& fx) const {
        FixtureChains out;
        out.params = proto_.selection();
        out.params.checkpoints.clear();
        ChainState state = ChainState::with_genesis(genesis_, fixed128::from_int(2));
        std::vector<digest256> path{genesis_.id};

        digest256 tip = genesis_.id;
        for (uint64_t slot : fx.prefix_slots) {
            tip = extend(state, tip, slot);
            path.push_back(tip);
        }
        out.prefix_path = path;

        const auto fork_point = [&](uint64_t requested) {
            const uint64_t h = requested == UINT64_MAX ? path.size() - 1 : requested;
            if (h >= path.size())
                throw ConfigError("fixture fork height " + std::to_string(h) + " beyond prefix");
            return path[h];
        };

        digest256 a = fork_point(fx.a_fork_height);
        for (uint64_t slot : fx.branch_a_slots)
            a = extend(state, a, slot);
        digest256 b = fork_point(fx.b_fork_height);
        for (uint64_t slot : fx.branch_b_slots)
            b = extend(state, b, slot);

        for (uint64_t h : fx.checkpoint_heights) {
            if (h >= path.size())
                throw ConfigError("fixture checkpoint height " + std::to_string(h) + " beyond prefix");
            out.params.checkpoints[h] = path[h];
            out.resolved_checkpoints[h] = path[h];
        }

        out.a_tip = a;
        out.b_tip = b;
        out.state = std::move(state);
        return out;
    }

    digest256 extend(ChainState& state, const digest256& tip, uint64_t slot) const {
        const auto& tip_entry = state.entry(tip);
        EpochSchedule sched;
        sched.slots_per_epoch = proto_.slots_per_epoch;
        sched.randomness = genesis_seed_;
        const digest256 input = vrf_input_encoding(genesis_seed_, slot, kFixturePool);
        const VrfEvaluation ev = vrf_eval(vrf_.sk, input);

        Block blk;
        blk.body.reward = proto_.reward;
        blk.header.vrf_output = ev.output;
        blk.header.vrf_proof = ev.proof;
        blk.header.pool_id = kFixturePool;
        blk.header.target = tip_entry.tau_next;
        blk.header.prev_id = tip;
        blk.header.timestamp = slot;
        blk.header.slot = slot;
        blk.header.merkle_root = body_merkle_root(blk.body);
        blk.header.witness_merkle_root = body_witness_root(blk.body);
        blk.header.signature.period = slot;
        blk.header.signature.mac = sign(sig_.sk, header_signing_bytes(blk.header));
        blk.id = header_id(blk.header);

        ValidationContext ctx;
        ctx.expected_target = tip_entry.tau_next;
        ctx.pools = &pools_;
        ctx.epoch_randomness = genesis_seed_;
        ctx.parent_height = tip_entry.height;
        ctx.finalized_height = state.finalized_height();
        ctx.max_reorg_depth = proto_.max_reorg_depth;
        ctx.reward_per_block = proto_.reward;
        ctx.sig_registry = &registry_key_;
        const auto hv = validate_header(blk.header, tip_entry.block.header, ctx);
        if (!hv.ok())
            throw std::logic_error("fixture header rejected: " + hv.detail);
        const auto bv = validate_block(blk, ctx);
        if (!bv.ok())
            throw std::logic_error("fixture block rejected: " + bv.detail);
        const auto cv = state.connect_block(blk, proto_.selection(), proto_.t_target, false);
        if (!cv.ok())
            throw std::logic_error("fixture connect failed: " + cv.detail);
        return blk.id;
    }

private:
    static constexpr uint64_t kFixturePool = 9000;
    ProtocolParams proto_;
    KeyPair sig_, vrf_;
    SimKeyRegistry registry_key_;
    std::map<uint64_t, PoolEntry> pools_;
    digest256 genesis_seed_;
    Block genesis_;
};

} // namespace rundetail

class ScenarioRunner {
public:
    ScenarioRunner(ScenarioConfig cfg, std::string output_dir, RunOptions opts)
        : cfg_(std::move(cfg)), out_dir_(std::move(output_dir)), opts_(opts) {}

    RunOutcome run() {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(out_dir_, ec);
        if (!fs::is_directory(out_dir_))
            throw std::runtime_error("cannot create output directory: " + out_dir_);

        if (!opts_.seed_override.empty())
            cfg_.seeds = opts_.seed_override;

        RunOutcome outcome;
        switch (cfg_.kind) {
        case ScenarioKind::ForkFixture:
            run_fixture(outcome);
            break;
        case ScenarioKind::NeSweep:
            run_ne(outcome);
            break;
        case ScenarioKind::MevScaling:
            run_mev(outcome);
            break;
        case ScenarioKind::Simulation:
            run_simulations(outcome);
            break;
        }

        write_summary(outcome);
        if (opts_.check && !outcome.all_passed())
            outcome.exit_code = 1;
        return outcome;
    }

private:
    using ordered_json = nlohmann::ordered_json;

    std::string path_in_out(const std::string& file) const { return out_dir_ + "/" + file; }

    std::ofstream open_out(const std::string& file) const {
        std::ofstream f(path_in_out(file));
        if (!f)
            throw std::runtime_error("cannot write " + path_in_out(file));
        return f;
    }

    void run_fixture(RunOutcome& outcome) {
        rundetail::FixtureBuilder builder(cfg_.sim.protocol);
        auto chains = builder.build(cfg_.fixture);

        SelectionTrace trace;
        const digest256 winner = select_chain(chains.state, chains.params, &trace);
        const std::string winner_branch = winner == chains.a_tip   ? "A"
                                          : winner == chains.b_tip ? "B"
                                                                   : "other";

        auto metrics = open_out("metrics_fixture.jsonl");
        const auto tip_record = [&](const SelectionTrace& tr, const std::string& phase) {
            for (const auto& t : tr.tips) {
                ordered_json j;
                j["record"] = "tip";
                j["phase"] = phase;
                j["id"] = to_hex(t.id);
                j["branch"] = t.id == chains.a_tip ? "A" : (t.id == chains.b_tip ? "B" : "other");
                j["height"] = t.height;
                j["trust_raw"] = t.trust;
                j["eligible"] = t.eligible;
                if (!t.reason.empty())
                    j["excluded_because"] = t.reason;
                metrics << j.dump() << "\n";
            }
        };
        tip_record(trace, "initial");
        {
            ordered_json j;
            j["record"] = "selection";
            j["phase"] = "initial";
            j["canonical_branch"] = winner_branch;
            j["canonical_tip"] = to_hex(winner);
            metrics << j.dump() << "\n";
        }

        if (!cfg_.fixture.expect_canonical.empty())
            rundetail::append_check(outcome, "fixture canonical branch",
                                    winner_branch == cfg_.fixture.expect_canonical,
                                    "expected " + cfg_.fixture.expect_canonical + ", selected " + winner_branch);

        summary_lines_.push_back("fixture " + cfg_.name + ": canonical branch " + winner_branch);

        if (!cfg_.fixture.extra_b_slots.empty()) {
            digest256 b = chains.b_tip;
            for (uint64_t slot : cfg_.fixture.extra_b_slots)
                b = builder.extend(chains.state, b, slot);
            chains.b_tip = b;
            SelectionTrace trace2;
            const digest256 winner2 = select_chain(chains.state, chains.params, &trace2);
            const std::string branch2 = winner2 == chains.a_tip   ? "A"
                                        : winner2 == chains.b_tip ? "B"
                                                                  : "other";
            tip_record(trace2, "after_extra");
            ordered_json j;
            j["record"] = "selection";
            j["phase"] = "after_extra";
            j["canonical_branch"] = branch2;
            j["canonical_tip"] = to_hex(winner2);
            metrics << j.dump() << "\n";
            if (!cfg_.fixture.expect_after_extra.empty())
                rundetail::append_check(outcome, "fixture flip after extra block",
                                        branch2 == cfg_.fixture.expect_after_extra,
                                        "expected " + cfg_.fixture.expect_after_extra + ", selected " + branch2);
            summary_lines_.push_back("fixture " + cfg_.name + ": after extra B block, canonical " + branch2);
        }

        if (!chains.resolved_checkpoints.empty())
            write_checkpoint_file(path_in_out("checkpoints_resolved.txt"), chains.resolved_checkpoints);
    }

    void run_simulations(RunOutcome& outcome) {
        for (const uint64_t seed : cfg_.seeds) {
            Simulator sim(cfg_.sim, seed);
            std::ofstream trace_file;
            if (opts_.trace) {
                trace_file = open_out("trace_" + std::to_string(seed) + ".jsonl");
                sim.set_trace_sink([&](uint64_t slot, const ChainState& obs) {
                    ordered_json j;
                    j["record"] = "slot";
                    j["slot"] = slot;
                    j["heads"] = obs.tips().size();
                    ordered_json tips = ordered_json::array();
                    for (const auto& tip : obs.tips()) {
                        ordered_json t;
                        t["id"] = to_hex(tip);
                        t["trust_raw"] = obs.entry(tip).cum_trust;
                        tips.push_back(std::move(t));
                    }
                    j["tips"] = std::move(tips);
                    j["canonical"] = to_hex(obs.canonical_tip());
                    trace_file << j.dump() << "\n";
                });
            }
            const RunMetrics m = sim.run();
            auto metrics = open_out("metrics_" + std::to_string(seed) + ".jsonl");
            metrics << rundetail::metrics_to_json(m, seed).dump() << "\n";
            evaluate_sim_checks(outcome, m, seed);
            summarize_sim(m, seed);
        }
    }

    void evaluate_sim_checks(RunOutcome& outcome, const RunMetrics& m, uint64_t seed) {
        if (!cfg_.checks.present)
            return;
        const auto tag = " (seed " + std::to_string(seed) + ")";
        const SimChecks& c = cfg_.checks;
        if (c.max_reorg_le != UINT64_MAX)
            rundetail::append_check(outcome, "reorg depth bound" + tag, m.max_reorg_depth_seen <= c.max_reorg_le,
                                    "deepest " + std::to_string(m.max_reorg_depth_seen) + " vs bound " +
                                        std::to_string(c.max_reorg_le));
        if (c.interval_within_pct > 0) {
            const double interval = m.trailing_mean_interval.to_double();
            const double target = static_cast<double>(cfg_.sim.protocol.t_target);
            const double dev = std::abs(interval - target) / target * 100.0;
            std::ostringstream d;
            d.precision(3);
            d << std::fixed << "trailing interval " << interval << "s vs target " << target << "s ("
              << dev << "% off)";
            rundetail::append_check(outcome, "interval convergence" + tag, dev <= c.interval_within_pct, d.str());
        }
        if (!c.expected_shares.empty() && c.share_tolerance_sigmas > 0) {
            uint64_t total = 0;
            for (const auto& [_, n] : m.blocks_produced)
                total += n;
            bool all_ok = total > 0;
            std::ostringstream d;
            for (const auto& [agent, expected] : c.expected_shares) {
                const auto it = m.blocks_produced.find(agent);
                const double got = it == m.blocks_produced.end()
                                       ? 0.0
                                       : static_cast<double>(it->second) / static_cast<double>(total);
                const double sigma = std::sqrt(expected * (1 - expected) / static_cast<double>(total));
                const bool ok = std::abs(got - expected) <= c.share_tolerance_sigmas * sigma;
                all_ok = all_ok && ok;
                d.precision(4);
                d << std::fixed << agent << " " << got << "~" << expected << " ";
            }
            rundetail::append_check(outcome, "stake-proportional shares" + tag, all_ok, d.str());
        }
        if (c.min_head_count_at_end > 0) {
            const uint32_t heads = m.head_count_by_slot.empty() ? 1 : m.head_count_by_slot.back();
            rundetail::append_check(outcome, "fork head count" + tag, heads >= c.min_head_count_at_end,
                                    std::to_string(heads) + " heads vs floor " +
                                        std::to_string(c.min_head_count_at_end));
        }
        if (c.exact_head_count_every_slot > 0) {
            bool ok = true;
            for (uint32_t h : m.head_count_by_slot)
                ok = ok && h == c.exact_head_count_every_slot;
            rundetail::append_check(outcome, "head count pinned" + tag, ok,
                                    "every slot must hold exactly " +
                                        std::to_string(c.exact_head_count_every_slot) + " head(s)");
        }
        if (c.expect_duplicate_rejections_ge > 0)
            rundetail::append_check(outcome, "duplicate signatures rejected" + tag,
                                    m.duplicate_signature_rejections >= c.expect_duplicate_rejections_ge,
                                    std::to_string(m.duplicate_signature_rejections) + " rejections");
    }

    void summarize_sim(const RunMetrics& m, uint64_t seed) {
        std::ostringstream line;
        line << "seed " << seed << ": height " << m.final_canonical_height << ", heads "
             << (m.head_count_by_slot.empty() ? 1u : m.head_count_by_slot.back()) << ", eps_cons "
             << m.competing_heights << "/" << m.observed_heights << ", max reorg " << m.max_reorg_depth_seen;
        summary_lines_.push_back(line.str());
        std::ostringstream shares;
        shares << "  produced:";
        for (const auto& [agent, n] : m.blocks_produced)
            shares << " " << agent << "=" << n;
        summary_lines_.push_back(shares.str());
    }

    void run_ne(RunOutcome& outcome) {
        const uint64_t seed = cfg_.seeds.front();
        const NeReport report = empirical_ne_validation(cfg_.ne.phi_m_grid, cfg_.ne.reward, cfg_.ne.rounds, seed,
                                                        cfg_.sim.protocol.alpha);
        auto metrics = open_out("metrics_ne.jsonl");
        for (const auto& p : report.points) {
            ordered_json j;
            j["record"] = "ne_point";
            j["phi_m"] = p.phi_m.str();
            j["honest_mean"] = p.honest_mean;
            j["fork_mean"] = p.fork_mean;
            j["honest_se"] = p.honest_se;
            j["fork_se"] = p.fork_se;
            j["closed_honest"] = p.closed_honest;
            j["closed_fork"] = p.closed_fork;
            j["ordering_matches_closed"] = p.ordering_matches_closed;
            metrics << j.dump() << "\n";
        }
        summary_lines_.push_back(report.table());

        rundetail::append_check(outcome, "NE orderings match closed forms", report.all_orderings_match, "");
        rundetail::append_check(outcome, "NE means within 3 standard errors", report.all_within_3se, "");
        for (const double phi : cfg_.ne.expect_honest_at) {
            const auto* p = find_point(report, phi);
            rundetail::append_check(outcome, "honest dominates at phi_m=" + std::to_string(phi),
                                    p != nullptr && p->honest_mean >= p->fork_mean - 3 * p->fork_se,
                                    p ? "honest " + std::to_string(p->honest_mean) + " vs fork " +
                                            std::to_string(p->fork_mean)
                                      : "grid point missing");
        }
        for (const double phi : cfg_.ne.expect_fork_at) {
            const auto* p = find_point(report, phi);
            rundetail::append_check(outcome, "fork dominates at phi_m=" + std::to_string(phi),
                                    p != nullptr && p->fork_mean > p->honest_mean,
                                    p ? "fork " + std::to_string(p->fork_mean) + " vs honest " +
                                            std::to_string(p->honest_mean)
                                      : "grid point missing");
        }
    }

    static const NePointResult* find_point(const NeReport& report, double phi) {
        for (const auto& p : report.points)
            if (std::abs(p.phi_m.to_double() - phi) < 1e-9)
                return &p;
        return nullptr;
    }

    void run_mev(RunOutcome& outcome) {
        const uint64_t seed = cfg_.seeds.front();
        MevParams params;
        params.pareto_cutoff = cfg_.mev.cutoff;
        params.trials = cfg_.mev.trials;
        const auto curve = mev_scaling_curve(cfg_.mev.k_max, params, seed);

        auto metrics = open_out("metrics_mev.jsonl");
        for (uint32_t k = 1; k <= cfg_.mev.k_max; ++k) {
            ordered_json j;
            j["record"] = "mev_point";
            j["k"] = k;
            j["expected_max"] = curve[k - 1];
            j["ratio_to_k"] = curve[k - 1] / static_cast<double>(k);
            metrics << j.dump() << "\n";
        }

        // least-squares slope over k
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(cfg_.mev.k_max);
        for (uint32_t k = 1; k <= cfg_.mev.k_max; ++k) {
            sx += k;
            sy += curve[k - 1];
            sxx += static_cast<double>(k) * k;
            sxy += static_cast<double>(k) * curve[k - 1];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

        double ratio_min = 1e300, ratio_max = 0;
        for (uint32_t k = cfg_.mev.stabilize_from; k <= cfg_.mev.k_max; ++k) {
            const double ratio = curve[k - 1] / static_cast<double>(k);
            ratio_min = std::min(ratio_min, ratio);
            ratio_max = std::max(ratio_max, ratio);
        }
        bool monotone = true;
        for (uint32_t k = 2; k <= cfg_.mev.k_max; ++k)
            monotone = monotone && curve[k - 1] >= curve[k - 2];

        std::ostringstream d;
        d.precision(4);
        d << std::fixed << "slope " << slope << ", ratio spread " << ratio_min << ".." << ratio_max;
        rundetail::append_check(outcome, "MEV slope positive", slope > 0, d.str());
        rundetail::append_check(outcome, "MEV ratio stabilizes",
                                ratio_max <= ratio_min * (1.0 + cfg_.mev.stabilize_tolerance), d.str());
        rundetail::append_check(outcome, "MEV estimate monotone in k", monotone, "");
        summary_lines_.push_back("mev: " + d.str());
    }

    void write_summary(RunOutcome& outcome) {
        auto f = open_out("summary.txt");
        std::ostringstream s;
        if (!opts_.no_timestamp) {
            const std::time_t now = std::time(nullptr);
            char buf[64];
            std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
            s << "# pulsar-sim " << cfg_.name << " " << buf << "\n";
        }
        s << "scenario " << cfg_.name << " (" << scenario_kind_name(cfg_.kind) << ")\n";
        for (const auto& line : summary_lines_)
            s << line << "\n";
        if (!outcome.checks.empty()) {
            s << "checks:\n";
            for (const auto& c : outcome.checks)
                s << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name
                  << (c.detail.empty() ? "" : " - " + c.detail) << "\n";
        }
        outcome.summary = s.str();
        f << outcome.summary;
    }

    ScenarioConfig cfg_;
    std::string out_dir_;
    RunOptions opts_;
    std::vector<std::string> summary_lines_;
};

inline RunOutcome run_scenario(ScenarioConfig cfg, const std::string& output_dir, const RunOptions& opts) {
    ScenarioRunner runner(std::move(cfg), output_dir, opts);
    return runner.run();
}

} // namespace pulsar

#endif // PULSAR_RUNNER_HPP
