// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_CHAIN_SELECT_HPP
#define PULSAR_CHAIN_SELECT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chain_state.hpp"
#include "selection.hpp"

namespace pulsar {

struct TipReport {
    digest256 id;
    uint64_t height = 0;
    trust_t trust = 0;
    bool eligible = true;
    std::string reason; // why a tip was excluded, empty when eligible
};

struct SelectionTrace {
    std::vector<TipReport> tips;
    digest256 selected;
    bool all_tips_violating = false;
};

// A candidate tip must carry every checkpointed block id at its height and
// must not fork below the finalized prefix.
inline bool tip_eligible(const ChainState& state, const SelectionParams& params, const digest256& tip,
                         std::string* why = nullptr) {
    const auto& e = state.entry(tip);

    if (state.finalized_height() > 0) {
        const digest256 anchor = state.ancestor_at(state.canonical_tip(), state.finalized_height());
        if (e.height < state.finalized_height() || state.ancestor_at(tip, state.finalized_height()) != anchor) {
            if (why)
                *why = "forks below finalized height " + std::to_string(state.finalized_height());
            return false;
        }
    }

    for (const auto& [height, required_id] : params.checkpoints) {
        if (height > e.height)
            continue; // not yet reached; cannot conflict
        if (state.ancestor_at(tip, height) != required_id) {
            if (why)
                *why = "misses checkpoint at height " + std::to_string(height);
            return false;
        }
    }
    return true;
}

// Density fork choice: maximal accumulated trust among eligible tips,
// first-seen order breaking exact ties. With every tip checkpoint-violating
// the current canonical tip stands and the trace says so.
inline digest256 select_chain(const ChainState& state, const SelectionParams& params,
                              SelectionTrace* trace = nullptr) {
    std::optional<digest256> best;
    trust_t best_trust = 0;
    uint64_t best_seq = 0;
    bool any_eligible = false;

    for (const digest256& tip : state.tips()) {
        const auto& e = state.entry(tip);
        TipReport report;
        report.id = tip;
        report.height = e.height;
        report.trust = e.cum_trust;

        std::string why;
        if (!tip_eligible(state, params, tip, &why)) {
            report.eligible = false;
            report.reason = why;
            if (trace)
                trace->tips.push_back(std::move(report));
            continue;
        }
        any_eligible = true;
        if (!best || e.cum_trust > best_trust || (e.cum_trust == best_trust && e.seq < best_seq)) {
            best = tip;
            best_trust = e.cum_trust;
            best_seq = e.seq;
        }
        if (trace)
            trace->tips.push_back(std::move(report));
    }

    const digest256 selected = any_eligible ? *best : state.canonical_tip();
    if (trace) {
        trace->selected = selected;
        trace->all_tips_violating = !any_eligible;
    }
    return selected;
}

// Advance finality to canonical height minus the reorg bound and drop
// branches rooted below it.
inline void prune_finalized(ChainState& state, const SelectionParams& params) {
    const auto& tip = state.entry(state.canonical_tip());
    if (tip.height <= params.max_reorg_depth)
        return;
    const uint64_t new_finalized = tip.height - params.max_reorg_depth;
    if (new_finalized <= state.finalized_height())
        return;
    state.set_finalized_height(new_finalized);
    state.prune_to_anchor(state.ancestor_at(state.canonical_tip(), new_finalized));
}

} // namespace pulsar

#endif // PULSAR_CHAIN_SELECT_HPP
