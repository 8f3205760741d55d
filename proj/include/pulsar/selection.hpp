// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_SELECTION_HPP
#define PULSAR_SELECTION_HPP

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>

#include "digest.hpp"
#include "fixed_point.hpp"

namespace pulsar {

// Density-based chain scoring: each block adds block_trust, each maximal
// run of empty slots between consecutive chain elements deducts
// 1 - e^(-alpha * run_length). The deduction converges to one unit, so no
// gap, however long, outweighs a single filled slot and chain trust can
// never go negative.
struct SelectionParams {
    fixed128 alpha;                          // convergence rate, >= 0
    uint64_t block_trust = 1;                // trust units per filled slot
    uint64_t max_reorg_depth = 1000;         // finality depth
    std::map<uint64_t, digest256> checkpoints; // height -> required block id

    static SelectionParams with_alpha(fixed128 a) {
        SelectionParams p;
        p.alpha = a;
        return p;
    }
};

struct ChainTrust {
    trust_t value = 0; // Q32.32, non-negative by construction

    friend bool operator==(ChainTrust a, ChainTrust b) { return a.value == b.value; }
    friend bool operator<(ChainTrust a, ChainTrust b) { return a.value < b.value; }
    friend bool operator>(ChainTrust a, ChainTrust b) { return a.value > b.value; }
};

// Trust deducted for a maximal run of t empty slots; strictly below one
// block's trust for every t.
inline trust_t gap_penalty(const SelectionParams& params, uint64_t gap_len) {
    if (gap_len == 0 || params.alpha.is_zero())
        return 0;
    // alpha * t, saturating high enough that the exponential underflows
    fixed128 x = fixed128::from_int(46);
    const U256 p = mul_full_u128(params.alpha.raw, static_cast<u128>(gap_len));
    if (p.hi == 0 && static_cast<uint64_t>(p.lo >> 64) < 46)
        x = fixed128::from_raw(p.lo);
    const fixed128 decay = exp_neg(x);                       // e^(-alpha t), Q64.64
    const u128 penalty_q64 = (static_cast<u128>(1) << 64) - decay.raw;
    trust_t penalty = static_cast<trust_t>(penalty_q64 >> (64 - kTrustFracBits));
    if (penalty >= kTrustOne)
        penalty = kTrustOne - 1; // keep the deduction strictly under one block
    return penalty;
}

// Score a chain given the slots of its blocks (ascending, genesis slot
// excluded). Gaps are counted between consecutive chain elements starting
// from the genesis slot; empty slots after the tip carry no penalty so
// tips of different ages stay comparable.
inline ChainTrust chain_trust_from_slots(const SelectionParams& params, std::span<const uint64_t> block_slots,
                                         uint64_t genesis_slot = 0) {
    uint64_t prev = genesis_slot;
    trust_t total = 0;
    for (uint64_t slot : block_slots) {
        if (slot <= prev)
            throw std::invalid_argument("block slots must be strictly increasing");
        const uint64_t gap = slot - prev - 1;
        total += params.block_trust * kTrustOne;
        total -= gap_penalty(params, gap);
        prev = slot;
    }
    return ChainTrust{total};
}

} // namespace pulsar

#endif // PULSAR_SELECTION_HPP
