// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_DIGEST_HPP
#define PULSAR_DIGEST_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pulsar {

// 256-bit digest, stored as four little-endian words.
struct digest256 {
    std::array<uint64_t, 4> w{};

    auto operator<=>(const digest256&) const = default;

    bool is_zero() const { return w[0] == 0 && w[1] == 0 && w[2] == 0 && w[3] == 0; }

    std::array<uint8_t, 32> bytes() const {
        std::array<uint8_t, 32> out{};
        for (size_t i = 0; i < 4; ++i)
            for (size_t b = 0; b < 8; ++b)
                out[i * 8 + b] = static_cast<uint8_t>(w[i] >> (8 * b));
        return out;
    }

    static digest256 from_bytes(const uint8_t* p) {
        digest256 d;
        for (size_t i = 0; i < 4; ++i) {
            uint64_t v = 0;
            for (size_t b = 0; b < 8; ++b)
                v |= static_cast<uint64_t>(p[i * 8 + b]) << (8 * b);
            d.w[i] = v;
        }
        return d;
    }
};

inline std::string to_hex(const digest256& d) {
    static const char* digits = "0123456789abcdef";
    const auto bytes = d.bytes();
    std::string s;
    s.reserve(64);
    for (uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

inline digest256 digest_from_hex(std::string_view hex) {
    if (hex.size() != 64)
        throw std::invalid_argument("digest hex must be 64 chars, got " + std::to_string(hex.size()));
    std::array<uint8_t, 32> bytes{};
    for (size_t i = 0; i < 32; ++i) {
        const int hi = hex_nibble(hex[2 * i]);
        const int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw std::invalid_argument("bad hex digit in digest: " + std::string(hex));
        bytes[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return digest256::from_bytes(bytes.data());
}

} // namespace pulsar

#endif // PULSAR_DIGEST_HPP
