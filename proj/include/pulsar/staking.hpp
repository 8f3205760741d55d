// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_STAKING_HPP
#define PULSAR_STAKING_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fixed_point.hpp"
#include "wide_int.hpp"

namespace pulsar {

enum class LedgerError : uint8_t {
    Ok,
    PledgeTooSmall,
    Duplicate,
    UnknownPool,
    UnknownDelegator,
    ZeroAmount,
    InsufficientDelegation,
    PoolNotActive,
};

struct LedgerResult {
    LedgerError code = LedgerError::Ok;
    std::string detail;

    bool ok() const { return code == LedgerError::Ok; }
    static LedgerResult success() { return {}; }
    static LedgerResult fail(LedgerError c, std::string why) { return {c, std::move(why)}; }
};

// Saturation divisor, pledge-influence coefficient (exact rational), and
// the pledge floor.
struct IncentiveParams {
    uint64_t k = 1000;
    uint64_t a_num = 75'375'728;
    uint64_t a_den = 1'000'000'000;
    uint64_t min_pledge = 0;

    uint64_t saturation_cap(uint64_t total_supply) const { return total_supply / k; }
};

// Pool size is capped at 1/k of the supply before it contributes weight.
inline uint64_t saturate(const IncentiveParams& params, uint64_t pool_stake, uint64_t total_supply) {
    const uint64_t cap = params.saturation_cap(total_supply);
    return pool_stake < cap ? pool_stake : cap;
}

// Pledge-adjusted election weight as a fraction of the total final supply
// (64-bit numerator over 2^64). Exact integer evaluation of
//
//   sigma - a/(a+1) * (sigma z^2 - s (z sigma - s (z - sigma))) / z^2
//
// with z = 1/k, sigma = pool_stake/S, s = pledge/S, rounded once at the
// end. The single rounding point keeps the result consistent with every
// algebraic rearrangement of the same formula.
inline uint64_t effective_weight_q64(const IncentiveParams& params, uint64_t pledge, uint64_t pool_stake,
                                     uint64_t total_supply) {
    if (pledge > pool_stake)
        throw std::invalid_argument("effective_weight: pledge exceeds pool stake");
    if (total_supply == 0)
        throw std::invalid_argument("effective_weight: zero supply");
    const uint64_t sg = saturate(params, pool_stake, total_supply);
    const uint64_t sp = pledge < sg ? pledge : sg;
    if (sg == 0)
        return 0;

    using Big = BigUInt384;
    const uint64_t S = total_supply;
    // numerator = sg*S^2*ad + an*k*sp*( (sg - sp)*S + k*sp*sg )
    const Big term_a = Big::from_u64(sg).mul_u64(S).mul_u64(S).mul_u64(params.a_den);
    const Big inner = Big::from_u64(sg - sp).mul_u64(S).add(Big::from_u64(sp).mul_u64(params.k).mul_u64(sg));
    const Big term_b = inner.mul_u64(params.a_num).mul_u64(params.k).mul_u64(sp);
    const Big num = term_a.add(term_b);
    // denominator = S^3 * (an + ad)
    const Big den = Big::from_u64(S).mul_u64(S).mul_u64(S).mul_u64(params.a_num + params.a_den);
    return Big::divide(num.shl_limbs(1), den).to_u64();
}

enum class PoolStatus : uint8_t { Active, Decommissioning };

struct Delegation {
    uint64_t amount = 0;
    uint64_t active_from_epoch = 0; // election eligibility starts here
};

struct Pool {
    uint64_t pool_id = 0;
    std::string owner;
    uint64_t pledge = 0;
    fixed128 fee; // fraction of pool gross reward retained by the owner
    std::map<std::string, Delegation> delegations;
    PoolStatus status = PoolStatus::Active;
    uint64_t cooldown_end_block = 0; // meaningful while decommissioning
    uint64_t active_from_epoch = 0;

    uint64_t total_stake() const {
        uint64_t s = pledge;
        for (const auto& [_, d] : delegations)
            s += d.amount;
        return s;
    }

    uint64_t eligible_stake(uint64_t epoch) const {
        if (status != PoolStatus::Active || active_from_epoch > epoch)
            return 0;
        uint64_t s = pledge;
        for (const auto& [_, d] : delegations)
            if (d.active_from_epoch <= epoch)
                s += d.amount;
        return s;
    }
};

struct PendingWithdrawal {
    std::string owner;
    uint64_t amount = 0;
    uint64_t unlock_block = 0;
};

// Account-based staking ledger: pools, delegations, cooldown queue.
// Single-writer; reward distribution is a pure function of a snapshot.
class StakeLedger {
public:
    explicit StakeLedger(uint64_t total_supply, IncentiveParams params = {})
        : total_supply_(total_supply), params_(params) {
        if (params_.min_pledge == 0)
            params_.min_pledge = total_supply / 10000; // 0.01% of the supply
    }

    const IncentiveParams& params() const { return params_; }
    uint64_t total_supply() const { return total_supply_; }

    LedgerResult create_pool(uint64_t pool_id, std::string owner, uint64_t pledge, fixed128 fee,
                             uint64_t current_epoch) {
        return create_pool_at(pool_id, std::move(owner), pledge, fee, current_epoch + 1);
    }

    // Bootstrap variant with explicit eligibility epoch (scenario genesis).
    LedgerResult create_pool_at(uint64_t pool_id, std::string owner, uint64_t pledge, fixed128 fee,
                                uint64_t active_from_epoch) {
        if (pledge < params_.min_pledge)
            return LedgerResult::fail(LedgerError::PledgeTooSmall,
                                      "pledge " + std::to_string(pledge) + " below minimum " +
                                          std::to_string(params_.min_pledge));
        if (pools_.count(pool_id))
            return LedgerResult::fail(LedgerError::Duplicate, "pool " + std::to_string(pool_id) + " exists");
        Pool p;
        p.pool_id = pool_id;
        p.owner = std::move(owner);
        p.pledge = pledge;
        p.fee = fee;
        p.active_from_epoch = active_from_epoch;
        pools_.emplace(pool_id, std::move(p));
        return LedgerResult::success();
    }

    LedgerResult delegate(uint64_t pool_id, const std::string& delegator, uint64_t amount,
                          uint64_t current_epoch) {
        if (amount == 0)
            return LedgerResult::fail(LedgerError::ZeroAmount, "cannot delegate zero");
        Pool* p = find_pool(pool_id);
        if (!p)
            return LedgerResult::fail(LedgerError::UnknownPool, "no pool " + std::to_string(pool_id));
        if (p->status != PoolStatus::Active)
            return LedgerResult::fail(LedgerError::PoolNotActive,
                                      "pool " + std::to_string(pool_id) + " is decommissioning");
        auto [it, fresh] = p->delegations.try_emplace(delegator);
        it->second.amount += amount;
        if (fresh || it->second.active_from_epoch < current_epoch + 1)
            it->second.active_from_epoch = current_epoch + 1;
        return LedgerResult::success();
    }

    // Bootstrap variant: delegation eligible from the given epoch.
    LedgerResult delegate_at(uint64_t pool_id, const std::string& delegator, uint64_t amount,
                             uint64_t active_from_epoch) {
        if (amount == 0)
            return LedgerResult::fail(LedgerError::ZeroAmount, "cannot delegate zero");
        Pool* p = find_pool(pool_id);
        if (!p)
            return LedgerResult::fail(LedgerError::UnknownPool, "no pool " + std::to_string(pool_id));
        auto& d = p->delegations[delegator];
        d.amount += amount;
        d.active_from_epoch = active_from_epoch;
        return LedgerResult::success();
    }

    LedgerResult undelegate(uint64_t pool_id, const std::string& delegator, uint64_t amount,
                            uint64_t current_block) {
        if (amount == 0)
            return LedgerResult::fail(LedgerError::ZeroAmount, "cannot undelegate zero");
        Pool* p = find_pool(pool_id);
        if (!p)
            return LedgerResult::fail(LedgerError::UnknownPool, "no pool " + std::to_string(pool_id));
        if (p->status != PoolStatus::Active)
            return LedgerResult::fail(LedgerError::PoolNotActive,
                                      "decommissioning pool already queued all withdrawals");
        auto it = p->delegations.find(delegator);
        if (it == p->delegations.end())
            return LedgerResult::fail(LedgerError::UnknownDelegator, delegator + " has no delegation here");
        if (it->second.amount < amount)
            return LedgerResult::fail(LedgerError::InsufficientDelegation,
                                      "only " + std::to_string(it->second.amount) + " delegated");
        it->second.amount -= amount;
        if (it->second.amount == 0)
            p->delegations.erase(it);
        pending_.push_back({delegator, amount, unlock_block_for(current_block)});
        return LedgerResult::success();
    }

    LedgerResult decommission_pool(uint64_t pool_id, uint64_t current_block) {
        Pool* p = find_pool(pool_id);
        if (!p)
            return LedgerResult::fail(LedgerError::UnknownPool, "no pool " + std::to_string(pool_id));
        if (p->status != PoolStatus::Active)
            return LedgerResult::fail(LedgerError::PoolNotActive, "already decommissioning");
        p->status = PoolStatus::Decommissioning;
        p->cooldown_end_block = unlock_block_for(current_block);
        pending_.push_back({p->owner, p->pledge, p->cooldown_end_block});
        for (const auto& [name, d] : p->delegations)
            pending_.push_back({name, d.amount, p->cooldown_end_block});
        return LedgerResult::success();
    }

    // Release matured withdrawals; returns (owner, amount) pairs. Pools past
    // their cooldown disappear from the registry.
    std::vector<std::pair<std::string, uint64_t>> process_unlocks(uint64_t current_block) {
        std::vector<std::pair<std::string, uint64_t>> released;
        std::vector<PendingWithdrawal> still;
        for (const auto& w : pending_) {
            if (w.unlock_block <= current_block)
                released.emplace_back(w.owner, w.amount);
            else
                still.push_back(w);
        }
        pending_ = std::move(still);
        for (auto it = pools_.begin(); it != pools_.end();) {
            if (it->second.status == PoolStatus::Decommissioning &&
                it->second.cooldown_end_block <= current_block)
                it = pools_.erase(it);
            else
                ++it;
        }
        return released;
    }

    const Pool* pool(uint64_t pool_id) const {
        const auto it = pools_.find(pool_id);
        return it == pools_.end() ? nullptr : &it->second;
    }

    const std::map<uint64_t, Pool>& pools() const { return pools_; }
    const std::vector<PendingWithdrawal>& pending_withdrawals() const { return pending_; }
    uint64_t cooldown_blocks = 7200; // ~10 days of 2-minute blocks

    uint64_t total_network_stake() const {
        uint64_t total = 0;
        for (const auto& [_, p] : pools_)
            total += p.total_stake();
        return total;
    }

    // Stake shares in units of 2^-64, summing to exactly 2^64 (largest-
    // remainder apportionment, ties to the lower pool id). Values are u128
    // so a single pool's full share of exactly one is representable.
    std::map<uint64_t, u128> relative_stakes() const {
        std::map<uint64_t, u128> shares;
        const uint64_t total = total_network_stake();
        if (total == 0 || pools_.empty())
            return shares;
        u128 assigned = 0;
        std::vector<std::pair<u128, uint64_t>> remainders; // (remainder, pool_id)
        for (const auto& [id, p] : pools_) {
            const u128 scaled = static_cast<u128>(p.total_stake()) << 64;
            shares[id] = scaled / total;
            assigned += shares[id];
            remainders.emplace_back(scaled % total, id);
        }
        u128 deficit = (static_cast<u128>(1) << 64) - assigned;
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first)
                return a.first > b.first;
            return a.second < b.second;
        });
        for (size_t i = 0; deficit > 0 && i < remainders.size(); ++i, --deficit)
            ++shares[remainders[i].second];
        return shares;
    }

    // phi for one pool; 2^64 encodes a full share.
    u128 relative_stake_q64(uint64_t pool_id) const {
        if (!pools_.count(pool_id))
            throw std::out_of_range("relative_stake: unknown pool " + std::to_string(pool_id));
        const auto shares = relative_stakes();
        return shares.at(pool_id);
    }

    // Election weight of a pool for a given epoch: eligible stake, saturated
    // and pledge-adjusted, as a fraction of supply.
    uint64_t election_weight_q64(uint64_t pool_id, uint64_t epoch) const {
        const Pool* p = pool(pool_id);
        if (!p)
            throw std::out_of_range("election_weight: unknown pool " + std::to_string(pool_id));
        const uint64_t sigma = p->eligible_stake(epoch);
        if (sigma == 0)
            return 0;
        uint64_t pledge = p->pledge < sigma ? p->pledge : sigma;
        return effective_weight_q64(params_, pledge, sigma, total_supply_);
    }

    // --- snapshot text format (scenario seeding) ---------------------------

    std::string export_text() const {
        std::ostringstream out;
        out << "supply " << total_supply_ << "\n";
        out << "params k " << params_.k << " a " << params_.a_num << "/" << params_.a_den << " min_pledge "
            << params_.min_pledge << " cooldown " << cooldown_blocks << "\n";
        for (const auto& [id, p] : pools_) {
            out << "pool " << id << " owner " << p.owner << " pledge " << p.pledge << " fee_raw_hi "
                << hi64(p.fee.raw) << " fee_raw_lo " << lo64(p.fee.raw) << " status "
                << (p.status == PoolStatus::Active ? "active" : "decommissioning") << " cooldown_end "
                << p.cooldown_end_block << " active_from " << p.active_from_epoch << "\n";
            for (const auto& [name, d] : p.delegations)
                out << "delegation " << id << " " << name << " " << d.amount << " active_from "
                    << d.active_from_epoch << "\n";
        }
        for (const auto& w : pending_)
            out << "pending " << w.owner << " " << w.amount << " unlock " << w.unlock_block << "\n";
        return out.str();
    }

    static StakeLedger import_text(const std::string& text) {
        std::istringstream in(text);
        std::string word;
        StakeLedger ledger(1);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty())
                continue;
            std::istringstream ls(line);
            std::string kind;
            ls >> kind;
            const auto expect = [&](const char* token) {
                std::string t;
                ls >> t;
                if (t != token)
                    throw std::invalid_argument("ledger snapshot line " + std::to_string(line_no) +
                                                ": expected '" + token + "', got '" + t + "'");
            };
            if (kind == "supply") {
                ls >> ledger.total_supply_;
            } else if (kind == "params") {
                std::string a_frac;
                expect("k");
                ls >> ledger.params_.k;
                expect("a");
                ls >> a_frac;
                const auto slash = a_frac.find('/');
                if (slash == std::string::npos)
                    throw std::invalid_argument("ledger snapshot line " + std::to_string(line_no) +
                                                ": bad a fraction");
                ledger.params_.a_num = std::stoull(a_frac.substr(0, slash));
                ledger.params_.a_den = std::stoull(a_frac.substr(slash + 1));
                expect("min_pledge");
                ls >> ledger.params_.min_pledge;
                expect("cooldown");
                ls >> ledger.cooldown_blocks;
            } else if (kind == "pool") {
                Pool p;
                std::string status;
                uint64_t fee_hi = 0, fee_lo = 0;
                ls >> p.pool_id;
                expect("owner");
                ls >> p.owner;
                expect("pledge");
                ls >> p.pledge;
                expect("fee_raw_hi");
                ls >> fee_hi;
                expect("fee_raw_lo");
                ls >> fee_lo;
                expect("status");
                ls >> status;
                p.status = status == "active" ? PoolStatus::Active : PoolStatus::Decommissioning;
                expect("cooldown_end");
                ls >> p.cooldown_end_block;
                expect("active_from");
                ls >> p.active_from_epoch;
                p.fee = fixed128::from_raw((static_cast<u128>(fee_hi) << 64) | fee_lo);
                ledger.pools_.emplace(p.pool_id, std::move(p));
            } else if (kind == "delegation") {
                uint64_t pool_id = 0;
                std::string name;
                Delegation d;
                ls >> pool_id >> name >> d.amount;
                expect("active_from");
                ls >> d.active_from_epoch;
                Pool* p = ledger.find_pool(pool_id);
                if (!p)
                    throw std::invalid_argument("ledger snapshot line " + std::to_string(line_no) +
                                                ": delegation to unknown pool");
                p->delegations[name] = d;
            } else if (kind == "pending") {
                PendingWithdrawal w;
                ls >> w.owner >> w.amount;
                expect("unlock");
                ls >> w.unlock_block;
                ledger.pending_.push_back(std::move(w));
            } else {
                throw std::invalid_argument("ledger snapshot line " + std::to_string(line_no) +
                                            ": unknown record '" + kind + "'");
            }
            if (ls.fail())
                throw std::invalid_argument("ledger snapshot line " + std::to_string(line_no) +
                                            ": malformed fields");
        }
        return ledger;
    }

private:
    Pool* find_pool(uint64_t pool_id) {
        const auto it = pools_.find(pool_id);
        return it == pools_.end() ? nullptr : &it->second;
    }

    uint64_t unlock_block_for(uint64_t current_block) const {
        const uint64_t cd = cooldown_blocks == 0 ? 1 : cooldown_blocks;
        return current_block + cd;
    }

    std::map<uint64_t, Pool> pools_;
    std::vector<PendingWithdrawal> pending_;
    uint64_t total_supply_;
    IncentiveParams params_;
};

// Epoch settlement: each pool's gross reward is blocks * r; the owner takes
// the fee cut, the rest splits pro rata over pledge and delegations.
// Rounding dust goes to the owner so payouts conserve exactly.
inline std::map<std::string, uint64_t> distribute_epoch_rewards(const StakeLedger& ledger,
                                                                const std::map<uint64_t, uint64_t>& epoch_blocks,
                                                                uint64_t reward_per_block) {
    std::map<std::string, uint64_t> payout;
    for (const auto& [pool_id, blocks] : epoch_blocks) {
        if (blocks == 0)
            continue;
        const Pool* p = ledger.pool(pool_id);
        if (!p)
            throw std::invalid_argument("rewards for unknown pool " + std::to_string(pool_id));
        const uint64_t gross = blocks * reward_per_block;
        const uint64_t fee_cut = fmul(fixed128::from_int(gross), p->fee).int_part();
        const uint64_t pot = gross - fee_cut;
        const uint64_t stake = p->total_stake();
        uint64_t distributed = 0;
        if (stake > 0) {
            for (const auto& [name, d] : p->delegations) {
                const uint64_t share =
                    static_cast<uint64_t>(static_cast<u128>(pot) * d.amount / stake);
                payout[name] += share;
                distributed += share;
            }
            const uint64_t owner_share =
                static_cast<uint64_t>(static_cast<u128>(pot) * p->pledge / stake);
            payout[p->owner] += owner_share;
            distributed += owner_share;
        }
        payout[p->owner] += fee_cut + (pot - distributed); // fee plus rounding dust
    }
    return payout;
}

} // namespace pulsar

#endif // PULSAR_STAKING_HPP
