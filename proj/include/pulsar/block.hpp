// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_BLOCK_HPP
#define PULSAR_BLOCK_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bytes.hpp"
#include "crypto.hpp"
#include "digest.hpp"
#include "fixed_point.hpp"
#include "hash.hpp"

namespace pulsar {

inline constexpr uint64_t kDefaultMaxBlockSize = 1'000'000;

// Header fields in canonical serialization order. The signature covers the
// serialization of every field after it; the block id is the hash of the
// full canonical serialization, so any node can recompute it.
struct BlockHeader {
    KesSignature signature;     // pool signature (period = slot when KES is enforced)
    uint64_t vrf_output = 0;    // [0,1) as a 64-bit numerator over 2^64
    digest256 vrf_proof;
    uint64_t pool_id = 0;
    fixed128 target;            // threshold snapshot valid for this block's slot
    digest256 prev_id;
    uint64_t timestamp = 0;     // UNIX seconds
    uint64_t slot = 0;
    digest256 merkle_root;
    digest256 witness_merkle_root;
};

struct BlockBody {
    std::vector<uint8_t> payload;       // opaque transaction bytes
    std::optional<uint64_t> reward;     // claimed block reward, if any

    size_t size_bytes() const { return payload.size() + (reward ? 8 : 0); }
};

struct Block {
    BlockHeader header;
    BlockBody body;
    digest256 id;
};

// --- canonical encoding ----------------------------------------------------

inline void write_header_consensus_fields(ByteWriter& w, const BlockHeader& h) {
    w.put_u64(h.vrf_output);
    w.put_digest(h.vrf_proof);
    w.put_u64(h.pool_id);
    w.put_u128(h.target.raw);
    w.put_digest(h.prev_id);
    w.put_u64(h.timestamp);
    w.put_u64(h.slot);
    w.put_digest(h.merkle_root);
    w.put_digest(h.witness_merkle_root);
}

// Message bytes the pool signs: everything except the signature itself.
inline std::vector<uint8_t> header_signing_bytes(const BlockHeader& h) {
    ByteWriter w;
    write_header_consensus_fields(w, h);
    return w.take();
}

inline std::vector<uint8_t> serialize_header(const BlockHeader& h) {
    ByteWriter w;
    w.put_u64(h.signature.period);
    w.put_digest(h.signature.mac);
    write_header_consensus_fields(w, h);
    return w.take();
}

inline BlockHeader parse_header(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    BlockHeader h;
    h.signature.period = r.get_u64();
    h.signature.mac = r.get_digest();
    h.vrf_output = r.get_u64();
    h.vrf_proof = r.get_digest();
    h.pool_id = r.get_u64();
    h.target = fixed128::from_raw(r.get_u128());
    h.prev_id = r.get_digest();
    h.timestamp = r.get_u64();
    h.slot = r.get_u64();
    h.merkle_root = r.get_digest();
    h.witness_merkle_root = r.get_digest();
    if (!r.exhausted())
        throw ParseError("trailing bytes after header");
    return h;
}

inline digest256 header_id(const BlockHeader& h) {
    const auto bytes = serialize_header(h);
    return Hasher{}.update("pulsar.block.id").update(bytes).finish();
}

inline std::vector<uint8_t> serialize_body(const BlockBody& b) {
    ByteWriter w;
    w.put_var_bytes(std::span<const uint8_t>(b.payload.data(), b.payload.size()));
    w.put_u8(b.reward ? 1 : 0);
    if (b.reward)
        w.put_u64(*b.reward);
    return w.take();
}

inline BlockBody parse_body(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    BlockBody b;
    b.payload = r.get_var_bytes();
    if (r.get_u8() != 0)
        b.reward = r.get_u64();
    if (!r.exhausted())
        throw ParseError("trailing bytes after body");
    return b;
}

// --- merkle commitments ----------------------------------------------------

inline constexpr size_t kMerkleChunkSize = 1024;

// Binary merkle tree over fixed-size payload chunks. Leaves and interior
// nodes are domain-separated, and the payload length is bound into each
// leaf tag to keep chunk-boundary games out.
inline digest256 merkle_over_payload(std::span<const uint8_t> payload, std::string_view domain) {
    std::vector<digest256> level;
    if (payload.empty()) {
        level.push_back(Hasher{}.update("pulsar.merkle.empty").update(domain).finish());
    } else {
        for (size_t off = 0; off < payload.size(); off += kMerkleChunkSize) {
            const size_t n = std::min(kMerkleChunkSize, payload.size() - off);
            level.push_back(Hasher{}
                                .update("pulsar.merkle.leaf")
                                .update(domain)
                                .update_u64(off)
                                .update(payload.subspan(off, n))
                                .finish());
        }
    }
    while (level.size() > 1) {
        std::vector<digest256> next;
        next.reserve((level.size() + 1) / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            const digest256& left = level[i];
            const digest256& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
            next.push_back(Hasher{}.update("pulsar.merkle.node").update(domain).update(left).update(right).finish());
        }
        level = std::move(next);
    }
    return level[0];
}

inline digest256 body_merkle_root(const BlockBody& b) {
    return merkle_over_payload(std::span<const uint8_t>(b.payload.data(), b.payload.size()), "txs");
}

inline digest256 body_witness_root(const BlockBody& b) {
    return merkle_over_payload(std::span<const uint8_t>(b.payload.data(), b.payload.size()), "witness");
}

inline Block make_block(BlockHeader header, BlockBody body) {
    Block blk;
    blk.header = header;
    blk.body = std::move(body);
    blk.id = header_id(blk.header);
    return blk;
}

} // namespace pulsar

#endif // PULSAR_BLOCK_HPP
