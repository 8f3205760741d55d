// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_CHAIN_STATE_HPP
#define PULSAR_CHAIN_STATE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "block.hpp"
#include "selection.hpp"
#include "threshold.hpp"
#include "validation.hpp"

namespace pulsar {

// Indexed block tree. Single-writer; every accessor is a pure function of
// the stored state. Ordered containers keep iteration deterministic.
class ChainState {
public:
    struct Entry {
        Block block;
        const Entry* parent = nullptr; // null only at genesis; map nodes are stable
        uint64_t height = 0;
        uint64_t seq = 0;        // arrival order, breaks trust ties
        trust_t cum_trust = 0;   // accumulated trust genesis -> this block
        fixed128 tau_next;       // threshold any child of this block must carry
    };

    // entries hold pointers into the node-based map, so states move but
    // never copy
    ChainState(const ChainState&) = delete;
    ChainState& operator=(const ChainState&) = delete;
    ChainState(ChainState&&) = default;
    ChainState& operator=(ChainState&&) = default;

    ChainState() = default;

    // A genesis entry anchors the tree; its tau seeds retargeting.
    static ChainState with_genesis(const Block& genesis, fixed128 genesis_tau) {
        ChainState st;
        Entry e;
        e.block = genesis;
        e.height = 0;
        e.seq = st.next_seq_++;
        e.cum_trust = 0;
        e.tau_next = genesis_tau;
        st.genesis_id_ = genesis.id;
        st.canonical_tip_ = genesis.id;
        st.entries_.emplace(genesis.id, std::move(e));
        st.tip_order_.push_back(genesis.id);
        return st;
    }

    const digest256& genesis_id() const { return genesis_id_; }
    uint64_t finalized_height() const { return finalized_height_; }
    const digest256& canonical_tip() const { return canonical_tip_; }
    size_t block_count() const { return entries_.size(); }

    bool contains(const digest256& id) const { return entries_.count(id) != 0; }

    const Entry& entry(const digest256& id) const {
        const auto it = entries_.find(id);
        if (it == entries_.end())
            throw std::out_of_range("unknown block id " + to_hex(id));
        return it->second;
    }

    // Leaf ids in first-seen order.
    const std::vector<digest256>& tips() const { return tip_order_; }

    const std::vector<digest256>* children_of(const digest256& id) const {
        const auto it = children_.find(id);
        return it == children_.end() ? nullptr : &it->second;
    }

    // Attach a validated block. Rejects attachment below the finalized
    // height; everything else is the caller's validation duty.
    ValidationVerdict connect_block(const Block& block, const SelectionParams& params, uint64_t t_target,
                                    bool retarget_enabled) {
        if (entries_.count(block.id))
            return ValidationVerdict::accept(); // idempotent
        const auto parent_it = entries_.find(block.header.prev_id);
        if (parent_it == entries_.end())
            return ValidationVerdict::reject(Verdict::BadParent, "parent not in store");
        const Entry& parent = parent_it->second;
        if (parent.height < finalized_height_)
            return ValidationVerdict::reject(Verdict::ReorgTooDeep,
                                             "attachment at height " + std::to_string(parent.height + 1) +
                                                 " is below finalized height " + std::to_string(finalized_height_));

        Entry e;
        e.block = block;
        e.parent = &parent;
        e.height = parent.height + 1;
        e.seq = next_seq_++;
        const uint64_t gap = block.header.slot - parent.block.header.slot - 1;
        e.cum_trust = parent.cum_trust + params.block_trust * kTrustOne - gap_penalty(params, gap);
        e.tau_next = block.header.target;

        // tau_next depends on the new block's own timestamp chain, so the
        // entry goes in first and the threshold is filled in after.
        const digest256 parent_id = block.header.prev_id;
        auto [it, inserted] = entries_.emplace(block.id, std::move(e));
        (void)inserted;
        children_[parent_id].push_back(block.id);
        if (retarget_enabled)
            it->second.tau_next = retargeted_tau(block.id, block.header.target, t_target);

        // parent stops being a tip, the child starts
        for (auto tip_it = tip_order_.begin(); tip_it != tip_order_.end(); ++tip_it) {
            if (*tip_it == parent_id) {
                tip_order_.erase(tip_it);
                break;
            }
        }
        tip_order_.push_back(block.id);
        return ValidationVerdict::accept();
    }

    // Slots of the blocks on the path genesis -> id, ascending, genesis excluded.
    std::vector<uint64_t> path_slots(const digest256& id) const {
        std::vector<uint64_t> slots;
        for (const Entry* e = &entry(id); e->parent != nullptr; e = e->parent)
            slots.push_back(e->block.header.slot);
        std::reverse(slots.begin(), slots.end());
        return slots;
    }

    // Ancestor of id at the given height (height must not exceed id's).
    digest256 ancestor_at(const digest256& id, uint64_t height) const {
        const Entry* e = &entry(id);
        if (e->height < height)
            throw std::invalid_argument("ancestor_at: target height above block");
        while (e->height > height)
            e = e->parent;
        return e->block.id;
    }

    // Height of the deepest common ancestor of two blocks.
    uint64_t fork_point_height(const digest256& a, const digest256& b) const {
        const Entry* ex = &entry(a);
        const Entry* ey = &entry(b);
        while (ex->height > ey->height)
            ex = ex->parent;
        while (ey->height > ex->height)
            ey = ey->parent;
        while (ex != ey) {
            ex = ex->parent;
            ey = ey->parent;
        }
        return ex->height;
    }

    // Mean block interval over the last window_len headers ending at tip_id
    // (span / intervals); falls back to t_target below two samples.
    fixed128 mean_interval(const digest256& tip_id, uint64_t t_target, size_t window_len = 100) const {
        const Entry* e = &entry(tip_id);
        const uint64_t newest = e->block.header.timestamp;
        uint64_t oldest = newest;
        size_t count = 0;
        while (count < window_len && e->parent != nullptr) {
            oldest = e->block.header.timestamp;
            ++count;
            e = e->parent;
        }
        if (count < 2)
            return fixed128::from_int(t_target);
        return fixed128::from_ratio(newest - oldest, static_cast<uint64_t>(count - 1));
    }

    void set_finalized_height(uint64_t h) {
        if (h < finalized_height_)
            throw std::logic_error("finalized height may never decrease");
        finalized_height_ = h;
    }

    void set_canonical_tip(const digest256& id) { canonical_tip_ = id; }

    // Drop every block that is not the finalized prefix or a descendant of
    // the finalized canonical block.
    void prune_to_anchor(const digest256& anchor_id) {
        std::set<digest256> keep;
        for (const Entry* e = &entry(anchor_id);; e = e->parent) { // finalized prefix
            keep.insert(e->block.id);
            if (e->parent == nullptr)
                break;
        }
        std::vector<digest256> stack{anchor_id}; // descendants
        while (!stack.empty()) {
            const digest256 id = stack.back();
            stack.pop_back();
            keep.insert(id);
            if (const auto* kids = children_of(id))
                for (const auto& k : *kids)
                    stack.push_back(k);
        }
        for (auto it = entries_.begin(); it != entries_.end();) {
            if (keep.count(it->first) == 0)
                it = entries_.erase(it);
            else
                ++it;
        }
        for (auto it = children_.begin(); it != children_.end();) {
            if (keep.count(it->first) == 0) {
                it = children_.erase(it);
            } else {
                auto& kids = it->second;
                kids.erase(std::remove_if(kids.begin(), kids.end(),
                                          [&](const digest256& k) { return keep.count(k) == 0; }),
                           kids.end());
                ++it;
            }
        }
        tip_order_.erase(std::remove_if(tip_order_.begin(), tip_order_.end(),
                                        [&](const digest256& t) { return keep.count(t) == 0; }),
                         tip_order_.end());
    }

private:
    // Threshold for children of new_tip: retarget from the mean interval of
    // the trailing 100-header window, clamped to tau/1000 per block.
    fixed128 retargeted_tau(const digest256& new_tip, fixed128 tau_prev, uint64_t t_target) const {
        return adjust_threshold(tau_prev, mean_interval(new_tip, t_target), fixed128::from_int(t_target));
    }

    std::map<digest256, Entry> entries_;
    std::map<digest256, std::vector<digest256>> children_;
    std::vector<digest256> tip_order_;
    digest256 genesis_id_;
    digest256 canonical_tip_;
    uint64_t finalized_height_ = 0;
    uint64_t next_seq_ = 0;
};

} // namespace pulsar

#endif // PULSAR_CHAIN_STATE_HPP
