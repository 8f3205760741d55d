// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_HASH_HPP
#define PULSAR_HASH_HPP

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "digest.hpp"

namespace pulsar {

// Simulation-grade 256-bit mixing hash. It is deterministic, has strong
// avalanche and collision behaviour at desk scale, and is NOT
// cryptographically secure; the interface is the swap point for a real
// hash function.

namespace detail {

inline constexpr uint64_t rotl64(uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

inline constexpr uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

} // namespace detail

class Hasher {
public:
    Hasher() = default;

    Hasher& update(std::span<const uint8_t> data) {
        for (uint8_t b : data)
            push_byte(b);
        return *this;
    }

    Hasher& update(std::string_view s) {
        return update(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
    }

    Hasher& update_u64(uint64_t v) {
        for (int i = 0; i < 8; ++i)
            push_byte(static_cast<uint8_t>(v >> (8 * i)));
        return *this;
    }

    Hasher& update(const digest256& d) {
        for (uint64_t w : d.w)
            update_u64(w);
        return *this;
    }

    digest256 finish() {
        // pad the tail word with the byte count so m and m||0x00 separate
        if (fill_ > 0)
            absorb(buf_ | (static_cast<uint64_t>(fill_) << 56));
        uint64_t s0 = s_[0], s1 = s_[1], s2 = s_[2], s3 = s_[3];
        s0 ^= len_;
        for (int round = 0; round < 4; ++round) {
            s0 = detail::mix64(s0 + detail::rotl64(s3, 41));
            s1 = detail::mix64(s1 + detail::rotl64(s0, 13));
            s2 = detail::mix64(s2 + detail::rotl64(s1, 31));
            s3 = detail::mix64(s3 + detail::rotl64(s2, 7) + len_);
        }
        digest256 d;
        d.w = {s0, s1, s2, s3};
        return d;
    }

private:
    void push_byte(uint8_t b) {
        buf_ |= static_cast<uint64_t>(b) << (8 * fill_);
        ++len_;
        if (++fill_ == 8) {
            absorb(buf_);
            buf_ = 0;
            fill_ = 0;
        }
    }

    void absorb(uint64_t w) {
        s_[0] = detail::mix64(s_[0] ^ (w + 0x9e3779b97f4a7c15ull));
        s_[1] += detail::rotl64(s_[0], 23) ^ w;
        s_[2] = detail::mix64(s_[2] + detail::rotl64(w, 29));
        s_[3] ^= s_[0] + detail::rotl64(s_[2], 11);
    }

    uint64_t s_[4] = {0x6a09e667f3bcc908ull, 0xbb67ae8584caa73bull,
                      0x3c6ef372fe94f82bull, 0xa54ff53a5f1d36f1ull};
    uint64_t buf_ = 0;
    unsigned fill_ = 0;
    uint64_t len_ = 0;
};

inline digest256 hash_bytes(std::span<const uint8_t> data) {
    return Hasher{}.update(data).finish();
}

inline digest256 hash_bytes(const std::vector<uint8_t>& data) {
    return hash_bytes(std::span<const uint8_t>(data.data(), data.size()));
}

// Domain-tagged hash of a digest chain; the workhorse for key derivation
// and commitment equations.
inline digest256 hash_tagged(std::string_view tag, std::initializer_list<digest256> parts) {
    Hasher h;
    h.update(tag);
    for (const auto& d : parts)
        h.update(d);
    return h.finish();
}

} // namespace pulsar

#endif // PULSAR_HASH_HPP
