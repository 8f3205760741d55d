// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_SCENARIO_HPP
#define PULSAR_SCENARIO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "digest.hpp"
#include "fixed_point.hpp"
#include "sim.hpp"

namespace pulsar {

using ordered_json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ScenarioKind : uint8_t { Simulation, ForkFixture, NeSweep, MevScaling };

inline const char* scenario_kind_name(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::Simulation: return "simulation";
    case ScenarioKind::ForkFixture: return "fork_fixture";
    case ScenarioKind::NeSweep: return "ne_sweep";
    case ScenarioKind::MevScaling: return "mev_scaling";
    }
    return "?";
}

// Explicit two-branch chain layout, used to reproduce the captioned
// fork-choice outcomes deterministically.
struct ForkFixture {
    std::vector<uint64_t> prefix_slots;       // common history after genesis
    uint64_t a_fork_height = UINT64_MAX;      // default: branch from prefix tip
    uint64_t b_fork_height = UINT64_MAX;
    std::vector<uint64_t> branch_a_slots;
    std::vector<uint64_t> branch_b_slots;
    std::vector<uint64_t> checkpoint_heights; // resolved against the prefix chain
    std::vector<uint64_t> extra_b_slots;      // phase-two additions to branch B
    std::string expect_canonical;             // "A" or "B"
    std::string expect_after_extra;           // optional phase-two expectation
};

struct NeSweepSpec {
    std::vector<Rational> phi_m_grid;
    uint64_t rounds = 20'000;
    uint64_t reward = 1;
    std::vector<double> expect_honest_at;   // phi values where honest must dominate
    std::vector<double> expect_fork_at;     // phi values where the fork must dominate
};

struct MevSpec {
    uint32_t k_max = 32;
    uint64_t trials = 1'000'000;
    double cutoff = 1e6;
    uint32_t stabilize_from = 8;
    double stabilize_tolerance = 0.20;
};

struct SimChecks {
    bool present = false;
    uint64_t max_reorg_le = UINT64_MAX;              // gate: observed reorgs bounded
    double interval_within_pct = 0;                  // gate: trailing interval near target
    double share_tolerance_sigmas = 0;               // gate: produced shares near stake shares
    std::map<std::string, double> expected_shares;   // agent -> share of produced blocks
    uint64_t min_head_count_at_end = 0;              // gate: fork blow-up floor
    uint64_t exact_head_count_every_slot = 0;        // gate: e.g. KES keeps one head
    uint64_t expect_duplicate_rejections_ge = 0;
};

struct ScenarioConfig {
    std::string name;
    ScenarioKind kind = ScenarioKind::Simulation;
    SimScenario sim;
    std::vector<uint64_t> seeds{1};
    std::string checkpoints_file;
    ForkFixture fixture;
    NeSweepSpec ne;
    MevSpec mev;
    SimChecks checks;
};

namespace cfgdetail {

inline std::string location_of(const std::string& text, size_t byte_offset) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i < byte_offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline void require_keys(const ordered_json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

inline fixed128 fixed_field(const ordered_json& obj, const std::string& key, fixed128 fallback) {
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    try {
        if (v.is_string())
            return parse_fixed_decimal(v.get<std::string>());
        if (v.is_number_unsigned())
            return fixed128::from_int(v.get<uint64_t>());
    } catch (const std::exception& e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
    throw ConfigError("field '" + key + "' must be a decimal string or unsigned integer");
}

inline uint64_t u64_field(const ordered_json& obj, const std::string& key, uint64_t fallback) {
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw ConfigError("field '" + key + "' must be a non-negative integer");
    return v.get<uint64_t>();
}

inline bool bool_field(const ordered_json& obj, const std::string& key, bool fallback) {
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean())
        throw ConfigError("field '" + key + "' must be a boolean");
    return v.get<bool>();
}

inline Rational rational_field(const ordered_json& v, const std::string& where) {
    if (v.is_number_unsigned())
        return Rational(static_cast<long long>(v.get<uint64_t>()));
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            if (slash != std::string::npos)
                return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
            // decimal literal -> rational over a power of ten
            const auto dot = s.find('.');
            if (dot == std::string::npos)
                return Rational(std::stoll(s));
            const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
            long long den = 1;
            for (size_t i = 0; i < s.size() - dot - 1; ++i)
                den *= 10;
            return Rational(std::stoll(digits), den);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad rational in " + where + ": '" + s + "'");
        }
    }
    throw ConfigError("expected rational (integer, \"n/d\" or decimal string) in " + where);
}

inline StrategyKind strategy_field(const std::string& s, const std::string& where) {
    if (s == "honest")
        return StrategyKind::Honest;
    if (s == "private_fork")
        return StrategyKind::PrivateFork;
    if (s == "equivocate")
        return StrategyKind::Equivocator;
    if (s == "equivocate_kes")
        return StrategyKind::EquivocatorWithKes;
    throw ConfigError("unknown strategy '" + s + "' in " + where);
}

inline std::vector<uint64_t> u64_list(const ordered_json& v, const std::string& where) {
    if (!v.is_array())
        throw ConfigError(where + " must be an array");
    std::vector<uint64_t> out;
    for (const auto& e : v) {
        if (!e.is_number_unsigned())
            throw ConfigError(where + " entries must be non-negative integers");
        out.push_back(e.get<uint64_t>());
    }
    return out;
}

} // namespace cfgdetail

// Checkpoint list file: one "<height> <64-hex block id>" pair per line;
// blank lines and '#' comments allowed.
inline std::map<uint64_t, digest256> load_checkpoint_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open checkpoint file: " + path);
    std::map<uint64_t, digest256> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        uint64_t height = 0;
        std::string hex;
        if (!(ls >> height >> hex))
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected '<height> <hex id>'");
        try {
            out[height] = digest_from_hex(hex);
        } catch (const std::exception& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_checkpoint_file(const std::string& path, const std::map<uint64_t, digest256>& checkpoints) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write checkpoint file: " + path);
    for (const auto& [height, id] : checkpoints)
        out << height << " " << to_hex(id) << "\n";
}

inline ScenarioConfig parse_scenario_json(const std::string& text, const std::string& source_name) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(source_name + ": JSON parse error at " + cfgdetail::location_of(text, e.byte) +
                          ": " + e.what());
    }
    using namespace cfgdetail;

    require_keys(root, "scenario root",
                 {"name", "kind", "protocol", "network", "agents", "run", "fixture", "ne", "mev", "checks"});

    ScenarioConfig cfg;
    if (!root.contains("name") || !root.at("name").is_string())
        throw ConfigError("scenario requires a string 'name'");
    cfg.name = root.at("name").get<std::string>();

    const std::string kind = root.contains("kind") ? root.at("kind").get<std::string>() : "simulation";
    if (kind == "simulation")
        cfg.kind = ScenarioKind::Simulation;
    else if (kind == "fork_fixture")
        cfg.kind = ScenarioKind::ForkFixture;
    else if (kind == "ne_sweep")
        cfg.kind = ScenarioKind::NeSweep;
    else if (kind == "mev_scaling")
        cfg.kind = ScenarioKind::MevScaling;
    else
        throw ConfigError("unknown scenario kind '" + kind + "'");

    // protocol (defaults are the published constants)
    ProtocolParams& proto = cfg.sim.protocol;
    if (root.contains("protocol")) {
        const auto& p = root.at("protocol");
        require_keys(p, "protocol",
                     {"t_target", "slots_per_epoch", "alpha", "max_reorg_depth", "block_trust", "k", "a",
                      "min_pledge", "cooldown_blocks", "reward", "total_supply", "max_block_size", "retarget",
                      "kes", "genesis_tau", "genesis_tau_scale"});
        proto.t_target = u64_field(p, "t_target", proto.t_target);
        if (proto.t_target == 0)
            throw ConfigError("t_target must be positive");
        proto.slots_per_epoch = u64_field(p, "slots_per_epoch", proto.slots_per_epoch);
        if (proto.slots_per_epoch == 0)
            throw ConfigError("slots_per_epoch must be positive");
        proto.alpha = fixed_field(p, "alpha", proto.alpha);
        proto.max_reorg_depth = u64_field(p, "max_reorg_depth", proto.max_reorg_depth);
        if (proto.max_reorg_depth == 0)
            throw ConfigError("max_reorg_depth must be positive");
        proto.block_trust = u64_field(p, "block_trust", proto.block_trust);
        proto.incentive.k = u64_field(p, "k", proto.incentive.k);
        if (p.contains("a")) {
            const Rational a = rational_field(p.at("a"), "protocol.a");
            if (a.negative())
                throw ConfigError("pledge coefficient a must be non-negative");
            proto.incentive.a_num = static_cast<uint64_t>(a.num);
            proto.incentive.a_den = static_cast<uint64_t>(a.den);
        }
        proto.incentive.min_pledge = u64_field(p, "min_pledge", 0);
        proto.cooldown_blocks = u64_field(p, "cooldown_blocks", proto.cooldown_blocks);
        proto.reward = u64_field(p, "reward", proto.reward);
        proto.total_supply = u64_field(p, "total_supply", proto.total_supply);
        proto.max_block_size = u64_field(p, "max_block_size", proto.max_block_size);
        proto.retarget = bool_field(p, "retarget", proto.retarget);
        proto.kes = bool_field(p, "kes", proto.kes);
        proto.genesis_tau = fixed_field(p, "genesis_tau", fixed128::zero());
        proto.genesis_tau_scale = fixed_field(p, "genesis_tau_scale", fixed128::zero());
    }

    if (root.contains("network")) {
        const auto& n = root.at("network");
        require_keys(n, "network", {"delta_slots", "jitter"});
        if (n.contains("delta_slots")) {
            const auto& d = n.at("delta_slots");
            if (!d.is_number_unsigned())
                throw ConfigError("network.delta_slots must be a non-negative integer");
            cfg.sim.network.delta_slots = d.get<uint64_t>();
        }
        cfg.sim.network.uniform_jitter = bool_field(n, "jitter", false);
    }

    if (root.contains("agents")) {
        const auto& agents = root.at("agents");
        if (!agents.is_array())
            throw ConfigError("'agents' must be an array");
        for (const auto& a : agents) {
            require_keys(a, "agent",
                         {"name", "pool", "pledge", "delegations", "fee", "strategy", "fork_target", "variants"});
            AgentSpec spec;
            if (!a.contains("name") || !a.at("name").is_string())
                throw ConfigError("every agent requires a string 'name'");
            spec.name = a.at("name").get<std::string>();
            spec.pool_id = u64_field(a, "pool", cfg.sim.agents.size() + 1);
            spec.pledge = u64_field(a, "pledge", 0);
            spec.fee = fixed_field(a, "fee", fixed128::zero());
            if (spec.fee > fixed128::one())
                throw ConfigError("agent " + spec.name + ": fee above one");
            if (a.contains("delegations")) {
                const auto& d = a.at("delegations");
                if (!d.is_object())
                    throw ConfigError("agent " + spec.name + ": delegations must be an object");
                for (const auto& [delegator, amount] : d.items()) {
                    if (!amount.is_number_unsigned())
                        throw ConfigError("agent " + spec.name + ": delegation amounts must be unsigned");
                    spec.delegations.emplace_back(delegator, amount.get<uint64_t>());
                }
            }
            if (a.contains("strategy"))
                spec.strategy = strategy_field(a.at("strategy").get<std::string>(), "agent " + spec.name);
            spec.fork_target = u64_field(a, "fork_target", 2);
            if (spec.fork_target == 0)
                throw ConfigError("agent " + spec.name + ": fork_target must be positive");
            spec.variants = static_cast<uint32_t>(u64_field(a, "variants", 2));
            if (spec.variants == 0)
                throw ConfigError("agent " + spec.name + ": variants must be positive");
            cfg.sim.agents.push_back(std::move(spec));
        }
    }

    if (root.contains("run")) {
        const auto& r = root.at("run");
        require_keys(r, "run", {"slots", "seeds", "checkpoints_file"});
        cfg.sim.slots = u64_field(r, "slots", cfg.sim.slots);
        if (r.contains("seeds")) {
            cfg.seeds = u64_list(r.at("seeds"), "run.seeds");
            if (cfg.seeds.empty())
                throw ConfigError("run.seeds must not be empty");
        }
        if (r.contains("checkpoints_file"))
            cfg.checkpoints_file = r.at("checkpoints_file").get<std::string>();
    }

    if (root.contains("fixture")) {
        const auto& f = root.at("fixture");
        require_keys(f, "fixture",
                     {"prefix_slots", "a_fork_height", "b_fork_height", "branch_a_slots", "branch_b_slots",
                      "checkpoints", "extra_b_slots", "expect_canonical", "expect_after_extra"});
        if (f.contains("prefix_slots"))
            cfg.fixture.prefix_slots = u64_list(f.at("prefix_slots"), "fixture.prefix_slots");
        cfg.fixture.a_fork_height = u64_field(f, "a_fork_height", UINT64_MAX);
        cfg.fixture.b_fork_height = u64_field(f, "b_fork_height", UINT64_MAX);
        if (f.contains("branch_a_slots"))
            cfg.fixture.branch_a_slots = u64_list(f.at("branch_a_slots"), "fixture.branch_a_slots");
        if (f.contains("branch_b_slots"))
            cfg.fixture.branch_b_slots = u64_list(f.at("branch_b_slots"), "fixture.branch_b_slots");
        if (f.contains("checkpoints"))
            cfg.fixture.checkpoint_heights = u64_list(f.at("checkpoints"), "fixture.checkpoints");
        if (f.contains("extra_b_slots"))
            cfg.fixture.extra_b_slots = u64_list(f.at("extra_b_slots"), "fixture.extra_b_slots");
        if (f.contains("expect_canonical"))
            cfg.fixture.expect_canonical = f.at("expect_canonical").get<std::string>();
        if (f.contains("expect_after_extra"))
            cfg.fixture.expect_after_extra = f.at("expect_after_extra").get<std::string>();
    }

    if (root.contains("ne")) {
        const auto& n = root.at("ne");
        require_keys(n, "ne", {"phi_m_grid", "rounds", "reward", "expect_honest_at", "expect_fork_at"});
        if (n.contains("phi_m_grid")) {
            if (!n.at("phi_m_grid").is_array())
                throw ConfigError("ne.phi_m_grid must be an array");
            for (const auto& v : n.at("phi_m_grid"))
                cfg.ne.phi_m_grid.push_back(cfgdetail::rational_field(v, "ne.phi_m_grid"));
        }
        cfg.ne.rounds = u64_field(n, "rounds", cfg.ne.rounds);
        cfg.ne.reward = u64_field(n, "reward", cfg.ne.reward);
        if (n.contains("expect_honest_at"))
            for (const auto& v : n.at("expect_honest_at"))
                cfg.ne.expect_honest_at.push_back(cfgdetail::rational_field(v, "ne.expect_honest_at").to_double());
        if (n.contains("expect_fork_at"))
            for (const auto& v : n.at("expect_fork_at"))
                cfg.ne.expect_fork_at.push_back(cfgdetail::rational_field(v, "ne.expect_fork_at").to_double());
    }

    if (root.contains("mev")) {
        const auto& m = root.at("mev");
        require_keys(m, "mev", {"k_max", "trials", "cutoff", "stabilize_from", "stabilize_tolerance"});
        cfg.mev.k_max = static_cast<uint32_t>(u64_field(m, "k_max", cfg.mev.k_max));
        cfg.mev.trials = u64_field(m, "trials", cfg.mev.trials);
        if (m.contains("cutoff"))
            cfg.mev.cutoff = m.at("cutoff").get<double>();
        if (cfg.mev.cutoff <= 1.0)
            throw ConfigError("mev.cutoff must exceed one");
        cfg.mev.stabilize_from = static_cast<uint32_t>(u64_field(m, "stabilize_from", cfg.mev.stabilize_from));
        if (m.contains("stabilize_tolerance"))
            cfg.mev.stabilize_tolerance = m.at("stabilize_tolerance").get<double>();
    }

    if (root.contains("checks")) {
        const auto& c = root.at("checks");
        require_keys(c, "checks",
                     {"max_reorg_le", "interval_within_pct", "share_tolerance_sigmas", "expected_shares",
                      "min_head_count_at_end", "exact_head_count_every_slot", "expect_duplicate_rejections_ge"});
        cfg.checks.present = true;
        cfg.checks.max_reorg_le = u64_field(c, "max_reorg_le", UINT64_MAX);
        if (c.contains("interval_within_pct"))
            cfg.checks.interval_within_pct = c.at("interval_within_pct").get<double>();
        if (c.contains("share_tolerance_sigmas"))
            cfg.checks.share_tolerance_sigmas = c.at("share_tolerance_sigmas").get<double>();
        if (c.contains("expected_shares")) {
            for (const auto& [agent, share] : c.at("expected_shares").items())
                cfg.checks.expected_shares[agent] = share.get<double>();
        }
        cfg.checks.min_head_count_at_end = u64_field(c, "min_head_count_at_end", 0);
        cfg.checks.exact_head_count_every_slot = u64_field(c, "exact_head_count_every_slot", 0);
        cfg.checks.expect_duplicate_rejections_ge = u64_field(c, "expect_duplicate_rejections_ge", 0);
    }

    // cross-field validation the simulator would otherwise hit mid-run
    if (cfg.kind == ScenarioKind::Simulation || cfg.kind == ScenarioKind::ForkFixture) {
        if (cfg.kind == ScenarioKind::Simulation && cfg.sim.agents.empty())
            throw ConfigError("simulation scenarios need at least one agent");
        uint64_t staked = 0;
        for (const auto& a : cfg.sim.agents) {
            staked += a.pledge;
            for (const auto& [_, amt] : a.delegations)
                staked += amt;
        }
        if (staked > proto.total_supply)
            throw ConfigError("agents stake more than the total supply");
    }
    if (cfg.kind == ScenarioKind::NeSweep && cfg.ne.phi_m_grid.empty())
        throw ConfigError("ne_sweep scenarios need ne.phi_m_grid");

    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    ScenarioConfig cfg = parse_scenario_json(buf.str(), path);
    if (!cfg.checkpoints_file.empty()) {
        // resolve relative to the scenario file
        std::string dir;
        const auto slash = path.find_last_of('/');
        if (slash != std::string::npos)
            dir = path.substr(0, slash + 1);
        const std::string cp_path =
            cfg.checkpoints_file.front() == '/' ? cfg.checkpoints_file : dir + cfg.checkpoints_file;
        cfg.sim.protocol.checkpoints = load_checkpoint_file(cp_path);
    }
    return cfg;
}

} // namespace pulsar

#endif // PULSAR_SCENARIO_HPP
