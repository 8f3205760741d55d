// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_LEADER_HPP
#define PULSAR_LEADER_HPP

#include <cstdint>
#include <optional>

#include "chain_state.hpp"
#include "crypto.hpp"
#include "fixed_point.hpp"
#include "threshold.hpp"
#include "validation.hpp"

namespace pulsar {

// Discrete time: one-second slots grouped into fixed epochs. Stake
// snapshots and randomness are constant within an epoch.
struct EpochSchedule {
    uint64_t epoch_index = 0;
    digest256 randomness;
    uint64_t slots_per_epoch = 432'000; // five days of one-second slots
    uint64_t target_block_interval = 120;

    uint64_t epoch_of(uint64_t slot) const { return slot / slots_per_epoch; }
    uint64_t first_slot() const { return epoch_index * slots_per_epoch; }
};

// Slot leadership test: evaluate the VRF on (epoch randomness, slot, pool)
// and win when the output lands under tau times the pool's weighted stake.
// Multiple pools may win the same slot; none winning is the common case.
inline std::optional<VrfEvaluation> is_slot_leader(const digest256& vrf_sk, uint64_t pool_id,
                                                   uint64_t weight_q64, uint64_t slot,
                                                   const EpochSchedule& schedule, fixed128 tau) {
    if (weight_q64 == 0)
        return std::nullopt;
    const digest256 input = vrf_input_encoding(schedule.randomness, slot, pool_id);
    VrfEvaluation ev = vrf_eval(vrf_sk, input);
    if (!vrf_output_wins(ev.output, tau, weight_q64))
        return std::nullopt;
    return ev;
}

// Epoch randomness: hash of the VRF outputs of the canonical blocks two
// epochs back, so the seed is settled before the stake snapshot it feeds.
// Epochs 0 and 1 run on the genesis seed, as does any empty lookback.
inline digest256 epoch_randomness(const ChainState& chain, uint64_t epoch_index, uint64_t slots_per_epoch,
                                  const digest256& genesis_seed) {
    if (epoch_index < 2)
        return genesis_seed;
    const uint64_t window_first = (epoch_index - 2) * slots_per_epoch;
    const uint64_t window_last = window_first + slots_per_epoch - 1;

    Hasher h;
    h.update("pulsar.epoch.rand").update_u64(epoch_index);
    bool any = false;
    digest256 cur = chain.canonical_tip();
    std::vector<uint64_t> outputs;
    while (cur != chain.genesis_id()) {
        const auto& e = chain.entry(cur);
        const uint64_t slot = e.block.header.slot;
        if (slot < window_first)
            break;
        if (slot <= window_last) {
            outputs.push_back(e.block.header.vrf_output);
            any = true;
        }
        cur = e.block.header.prev_id;
    }
    if (!any)
        return genesis_seed;
    // walked tip->genesis; feed in ascending slot order
    for (auto it = outputs.rbegin(); it != outputs.rend(); ++it)
        h.update_u64(*it);
    return h.finish();
}

} // namespace pulsar

#endif // PULSAR_LEADER_HPP
