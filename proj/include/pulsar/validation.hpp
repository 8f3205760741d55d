// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_VALIDATION_HPP
#define PULSAR_VALIDATION_HPP

#include <cstdint>
#include <map>
#include <string>

#include "block.hpp"
#include "crypto.hpp"
#include "fixed_point.hpp"

namespace pulsar {

enum class Verdict : uint8_t {
    Accept,
    BadParent,
    TimestampOrder,
    BadSignature,
    BadVRF,
    BadTarget,
    ReorgTooDeep,
    TooLarge,
    BadMerkle,
    BadReward,
};

inline const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Accept: return "Accept";
    case Verdict::BadParent: return "BadParent";
    case Verdict::TimestampOrder: return "TimestampOrder";
    case Verdict::BadSignature: return "BadSignature";
    case Verdict::BadVRF: return "BadVRF";
    case Verdict::BadTarget: return "BadTarget";
    case Verdict::ReorgTooDeep: return "ReorgTooDeep";
    case Verdict::TooLarge: return "TooLarge";
    case Verdict::BadMerkle: return "BadMerkle";
    case Verdict::BadReward: return "BadReward";
    }
    return "?";
}

struct ValidationVerdict {
    Verdict code = Verdict::Accept;
    std::string detail;

    bool ok() const { return code == Verdict::Accept; }

    static ValidationVerdict accept() { return {}; }
    static ValidationVerdict reject(Verdict c, std::string why) { return {c, std::move(why)}; }
};

// What a node knows about a registered pool at validation time.
struct PoolEntry {
    digest256 sig_pk;        // plain-signature public key (non-KES mode)
    digest256 kes_pk;        // KES public key (KES mode)
    digest256 vrf_pk;
    uint64_t weight_q64 = 0; // pledge-adjusted election weight, fraction of supply
};

struct ValidationContext {
    fixed128 expected_target;           // tau valid for the block's slot on this chain
    const std::map<uint64_t, PoolEntry>* pools = nullptr;
    digest256 epoch_randomness;
    uint64_t parent_height = 0;
    uint64_t finalized_height = 0;
    uint64_t max_reorg_depth = 1000;
    uint64_t max_block_size = kDefaultMaxBlockSize;
    uint64_t reward_per_block = 0;
    const SimKeyRegistry* sig_registry = nullptr;
    const KesRegistry* kes_registry = nullptr;
    bool kes_enforced = false;
};

// Leadership condition: vrf_output < tau * weighted_stake. The product is
// exact in Q64.64; a threshold at or above one admits every output.
inline bool vrf_output_wins(uint64_t vrf_output_q64, fixed128 tau, uint64_t weight_q64) {
    const U256 p = mul_full_u128(tau.raw, static_cast<u128>(weight_q64));
    if (p.hi != 0)
        return true; // threshold saturates the unit interval
    const u128 threshold_q64 = p.lo >> 64;
    return static_cast<u128>(vrf_output_q64) < threshold_q64;
}

// Header pipeline: parent linkage, timestamp/slot ordering, reorg depth,
// signature, target snapshot, and the VRF leadership proof, in that order.
inline ValidationVerdict validate_header(const BlockHeader& header, const BlockHeader& parent,
                                         const ValidationContext& ctx) {
    const digest256 parent_id = header_id(parent);
    if (header.prev_id != parent_id)
        return ValidationVerdict::reject(Verdict::BadParent, "prev_id does not match supplied parent");

    if (header.timestamp <= parent.timestamp)
        return ValidationVerdict::reject(Verdict::TimestampOrder, "timestamp not strictly after parent");
    if (header.slot <= parent.slot)
        return ValidationVerdict::reject(Verdict::TimestampOrder, "slot not strictly after parent");

    if (ctx.parent_height < ctx.finalized_height)
        return ValidationVerdict::reject(Verdict::ReorgTooDeep,
                                         "attaches below finalized height " + std::to_string(ctx.finalized_height));

    if (ctx.pools == nullptr)
        return ValidationVerdict::reject(Verdict::BadSignature, "no pool registry in context");
    const auto pool_it = ctx.pools->find(header.pool_id);
    if (pool_it == ctx.pools->end())
        return ValidationVerdict::reject(Verdict::BadSignature, "unknown pool " + std::to_string(header.pool_id));
    const PoolEntry& pool = pool_it->second;

    const auto msg = header_signing_bytes(header);
    if (ctx.kes_enforced) {
        if (ctx.kes_registry == nullptr ||
            !ctx.kes_registry->verify(pool.kes_pk, msg, header.signature, header.slot))
            return ValidationVerdict::reject(Verdict::BadSignature, "KES signature check failed");
    } else {
        if (ctx.sig_registry == nullptr || !ctx.sig_registry->verify(pool.sig_pk, msg, header.signature.mac))
            return ValidationVerdict::reject(Verdict::BadSignature, "signature check failed");
    }

    if (header.target != ctx.expected_target)
        return ValidationVerdict::reject(Verdict::BadTarget, "target snapshot differs from chain-computed tau");

    const digest256 vrf_in = vrf_input_encoding(ctx.epoch_randomness, header.slot, header.pool_id);
    VrfEvaluation ev{header.vrf_output, header.vrf_proof};
    if (!vrf_verify(pool.vrf_pk, vrf_in, ev))
        return ValidationVerdict::reject(Verdict::BadVRF, "VRF proof invalid");
    if (!vrf_output_wins(header.vrf_output, ctx.expected_target, pool.weight_q64))
        return ValidationVerdict::reject(Verdict::BadVRF, "VRF output not under threshold");

    return ValidationVerdict::accept();
}

// Body pipeline, run after the header is accepted: size bound, merkle
// commitments, reward ceiling.
inline ValidationVerdict validate_block(const Block& block, const ValidationContext& ctx) {
    if (block.body.size_bytes() > ctx.max_block_size)
        return ValidationVerdict::reject(Verdict::TooLarge,
                                         "body is " + std::to_string(block.body.size_bytes()) + " bytes");
    if (body_merkle_root(block.body) != block.header.merkle_root)
        return ValidationVerdict::reject(Verdict::BadMerkle, "merkle root mismatch");
    if (body_witness_root(block.body) != block.header.witness_merkle_root)
        return ValidationVerdict::reject(Verdict::BadMerkle, "witness merkle root mismatch");
    if (block.body.reward && *block.body.reward > ctx.reward_per_block)
        return ValidationVerdict::reject(Verdict::BadReward,
                                         "claimed reward " + std::to_string(*block.body.reward) +
                                             " exceeds scheduled " + std::to_string(ctx.reward_per_block));
    return ValidationVerdict::accept();
}

} // namespace pulsar

#endif // PULSAR_VALIDATION_HPP
