// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_RNG_HPP
#define PULSAR_RNG_HPP

#include <cstdint>

namespace pulsar {

// xoshiro256** seeded through splitmix64. Hand-rolled so that streams are
// bit-identical on every platform; std::uniform_* distributions are not.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& s : s_) {
            x += 0x9e3779b97f4a7c15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            s = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased integer in [0, bound) via rejection sampling.
    uint64_t next_below(uint64_t bound) {
        if (bound == 0)
            return 0;
        const uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold)
                return r % bound;
        }
    }

    // Uniform fraction in [0,1) with 53 bits, for non-consensus statistics.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Derive an independent child stream; used to give each simulation
    // subsystem its own deterministic sequence.
    Rng fork(uint64_t stream_id) {
        Rng child(next_u64() ^ (stream_id * 0xd1342543de82ef95ull + 0x9e3779b97f4a7c15ull));
        return child;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

} // namespace pulsar

#endif // PULSAR_RNG_HPP
