// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_CRYPTO_HPP
#define PULSAR_CRYPTO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

#include "digest.hpp"
#include "hash.hpp"

namespace pulsar {

// Simulation-grade primitives. Signatures are keyed MACs with public
// verification routed through a key registry that every simulated node
// shares; the VRF is hash-derived with a commitment-equation proof. The
// interfaces mirror a real scheme so hardened backends can be dropped in,
// but nothing here is secure against a real adversary.

struct KeyPair {
    digest256 sk;
    digest256 pk;
};

inline digest256 derive_pk(const digest256& sk) { return hash_tagged("pulsar.pk", {sk}); }

inline KeyPair keypair_from_seed(uint64_t seed) {
    KeyPair kp;
    kp.sk = Hasher{}.update("pulsar.sk").update_u64(seed).finish();
    kp.pk = derive_pk(kp.sk);
    return kp;
}

// ---------------------------------------------------------------------------
// Plain signatures

inline digest256 sign(const digest256& sk, std::span<const uint8_t> message) {
    return Hasher{}.update("pulsar.sig").update(sk).update(message).finish();
}

// pk -> sk lookup available to all simulated verifiers.
class SimKeyRegistry {
public:
    void register_keypair(const KeyPair& kp) { sk_by_pk_[kp.pk] = kp.sk; }

    const digest256* find_sk(const digest256& pk) const {
        const auto it = sk_by_pk_.find(pk);
        return it == sk_by_pk_.end() ? nullptr : &it->second;
    }

    bool verify(const digest256& pk, std::span<const uint8_t> message, const digest256& signature) const {
        const digest256* sk = find_sk(pk);
        if (sk == nullptr)
            return false;
        return sign(*sk, message) == signature;
    }

private:
    std::map<digest256, digest256> sk_by_pk_;
};

// ---------------------------------------------------------------------------
// VRF

struct VrfEvaluation {
    uint64_t output = 0; // fraction of [0,1) as a 64-bit numerator over 2^64
    digest256 proof;
};

inline digest256 vrf_input_encoding(const digest256& epoch_randomness, uint64_t slot, uint64_t pool_id) {
    return Hasher{}.update("pulsar.vrf.in").update(epoch_randomness).update_u64(slot).update_u64(pool_id).finish();
}

inline digest256 vrf_proof_commitment(const digest256& pk, const digest256& input, uint64_t output) {
    return Hasher{}.update("pulsar.vrf.prf").update(pk).update(input).update_u64(output).finish();
}

inline VrfEvaluation vrf_eval(const digest256& sk, const digest256& input) {
    VrfEvaluation ev;
    ev.output = Hasher{}.update("pulsar.vrf.out").update(sk).update(input).finish().w[0];
    ev.proof = vrf_proof_commitment(derive_pk(sk), input, ev.output);
    return ev;
}

// In-simulation verification checks the commitment equation from public
// material only; the pk->sk registry recomputation is reserved for test
// oracles.
inline bool vrf_verify(const digest256& pk, const digest256& input, const VrfEvaluation& ev) {
    return vrf_proof_commitment(pk, input, ev.output) == ev.proof;
}

// ---------------------------------------------------------------------------
// Key-evolving signatures

// Signing ratchets the secret forward and destroys the old period's key;
// an honestly held key can therefore sign at most once per period.
struct KesKey {
    digest256 sk;
    uint64_t period = 0;
    digest256 chain_digest; // commitment to the evolution history

    KesKey() = default;
    KesKey(digest256 secret, uint64_t p, digest256 chain) : sk(secret), period(p), chain_digest(chain) {}

    KesKey(const KesKey&) = delete;
    KesKey& operator=(const KesKey&) = delete;
    KesKey(KesKey&&) = default;
    KesKey& operator=(KesKey&&) = default;
};

struct KesSignature {
    uint64_t period = 0;
    digest256 mac;
};

inline digest256 kes_pk_from_base(const digest256& base_sk) { return hash_tagged("pulsar.kes.pk", {base_sk}); }

inline KesKey kes_keygen(uint64_t seed) {
    const digest256 base = Hasher{}.update("pulsar.kes.sk").update_u64(seed).finish();
    return KesKey{base, 0, hash_tagged("pulsar.kes.chain", {base})};
}

inline digest256 kes_ratchet_secret(const digest256& sk) { return hash_tagged("pulsar.kes.evolve", {sk}); }

// Advance a key to the given period without signing (periods map to slots;
// skipped slots burn their keys).
inline KesKey kes_fast_forward(KesKey key, uint64_t period) {
    if (period < key.period)
        throw std::invalid_argument("KES key cannot ratchet backwards");
    while (key.period < period) {
        key.sk = kes_ratchet_secret(key.sk);
        key.chain_digest = hash_tagged("pulsar.kes.chain", {key.chain_digest, key.sk});
        ++key.period;
    }
    return key;
}

inline digest256 kes_mac(const digest256& period_sk, uint64_t period, std::span<const uint8_t> message) {
    return Hasher{}.update("pulsar.kes.sig").update(period_sk).update_u64(period).update(message).finish();
}

// Sign and evolve: the returned key is at period + 1 and the consumed
// key's secret is unrecoverable from it.
inline std::pair<KesSignature, KesKey> kes_sign(KesKey key, std::span<const uint8_t> message) {
    KesSignature sig;
    sig.period = key.period;
    sig.mac = kes_mac(key.sk, key.period, message);
    KesKey evolved = kes_fast_forward(std::move(key), sig.period + 1);
    return {sig, std::move(evolved)};
}

// Registry mapping KES public keys to their base secrets, with a forward
// derivation cache so verification at period p costs O(gap) instead of O(p).
class KesRegistry {
public:
    digest256 register_base(const digest256& base_sk) {
        const digest256 pk = kes_pk_from_base(base_sk);
        auto& chain = chains_[pk];
        if (chain.empty())
            chain.emplace(0, base_sk);
        return pk;
    }

    bool verify(const digest256& pk, std::span<const uint8_t> message, const KesSignature& sig,
                uint64_t expected_period) const {
        if (sig.period != expected_period)
            return false;
        const digest256* sk = secret_at(pk, sig.period);
        if (sk == nullptr)
            return false;
        return kes_mac(*sk, sig.period, message) == sig.mac;
    }

private:
    const digest256* secret_at(const digest256& pk, uint64_t period) const {
        const auto it = chains_.find(pk);
        if (it == chains_.end())
            return nullptr;
        auto& chain = it->second;
        auto lb = chain.upper_bound(period);
        if (lb == chain.begin())
            return nullptr;
        --lb;
        digest256 sk = lb->second;
        for (uint64_t p = lb->first; p < period; ++p)
            sk = kes_ratchet_secret(sk);
        const auto ins = chain.emplace(period, sk).first;
        return &ins->second;
    }

    mutable std::map<digest256, std::map<uint64_t, digest256>> chains_;
};

// Node-side equivocation guard: remembers the first signature seen per
// (pk, period) and flags any later, different one.
class KesMonitor {
public:
    enum class Check { Fresh, SeenIdentical, DuplicatePeriod };

    Check observe(const digest256& pk, const KesSignature& sig) {
        const auto key = std::make_pair(pk, sig.period);
        const auto it = seen_.find(key);
        if (it == seen_.end()) {
            seen_.emplace(key, sig.mac);
            return Check::Fresh;
        }
        return it->second == sig.mac ? Check::SeenIdentical : Check::DuplicatePeriod;
    }

private:
    std::map<std::pair<digest256, uint64_t>, digest256> seen_;
};

} // namespace pulsar

#endif // PULSAR_CRYPTO_HPP
