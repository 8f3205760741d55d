// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_FIXED_POINT_HPP
#define PULSAR_FIXED_POINT_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pulsar {

using u128 = unsigned __int128;

inline constexpr uint64_t lo64(u128 v) { return static_cast<uint64_t>(v); }
inline constexpr uint64_t hi64(u128 v) { return static_cast<uint64_t>(v >> 64); }

struct U256 {
    u128 hi = 0;
    u128 lo = 0;
};

// Full 128x128 -> 256 bit multiply.
inline constexpr U256 mul_full_u128(u128 a, u128 b) {
    const u128 a0 = lo64(a), a1 = hi64(a);
    const u128 b0 = lo64(b), b1 = hi64(b);
    const u128 p00 = a0 * b0;
    const u128 p01 = a0 * b1;
    const u128 p10 = a1 * b0;
    const u128 p11 = a1 * b1;
    u128 mid = (p00 >> 64) + lo64(p01) + lo64(p10);
    U256 r;
    r.lo = (mid << 64) | lo64(p00);
    r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    return r;
}

// Divide a 256-bit numerator by a 128-bit denominator; quotient must fit
// in 128 bits. Shift-subtract long division, deterministic on all targets.
inline u128 div_u256_u128(U256 num, u128 den) {
    if (den == 0)
        throw std::domain_error("fixed-point division by zero");
    if (num.hi >= den)
        throw std::overflow_error("fixed-point quotient overflow");
    u128 rem = num.hi;
    u128 quot = 0;
    for (int i = 127; i >= 0; --i) {
        const unsigned top = static_cast<unsigned>(rem >> 127);
        rem = (rem << 1) | ((num.lo >> i) & 1);
        quot <<= 1;
        if (top || rem >= den) {
            rem -= den;
            quot |= 1;
        }
    }
    return quot;
}

// Unsigned Q64.64 fixed-point value. All consensus-critical real arithmetic
// goes through this type; floating point never decides consensus.
struct fixed128 {
    u128 raw = 0;

    constexpr fixed128() = default;

    static constexpr fixed128 from_raw(u128 r) {
        fixed128 f;
        f.raw = r;
        return f;
    }
    static constexpr fixed128 from_int(uint64_t v) { return from_raw(static_cast<u128>(v) << 64); }
    static constexpr fixed128 zero() { return {}; }
    static constexpr fixed128 one() { return from_int(1); }

    // Exact floor(num / den) in Q64.64.
    static fixed128 from_ratio(uint64_t num, uint64_t den) {
        if (den == 0)
            throw std::domain_error("from_ratio: zero denominator");
        U256 n; // num * 2^64 as a 256-bit value
        n.hi = 0;
        n.lo = static_cast<u128>(num) << 64;
        return from_raw(div_u256_u128(n, static_cast<u128>(den)));
    }

    constexpr uint64_t int_part() const { return hi64(raw); }
    constexpr uint64_t frac_part() const { return lo64(raw); }
    constexpr bool is_zero() const { return raw == 0; }

    double to_double() const {
        return static_cast<double>(int_part()) + static_cast<double>(frac_part()) / 18446744073709551616.0;
    }

    friend constexpr bool operator==(fixed128 a, fixed128 b) { return a.raw == b.raw; }
    friend constexpr bool operator!=(fixed128 a, fixed128 b) { return a.raw != b.raw; }
    friend constexpr bool operator<(fixed128 a, fixed128 b) { return a.raw < b.raw; }
    friend constexpr bool operator<=(fixed128 a, fixed128 b) { return a.raw <= b.raw; }
    friend constexpr bool operator>(fixed128 a, fixed128 b) { return a.raw > b.raw; }
    friend constexpr bool operator>=(fixed128 a, fixed128 b) { return a.raw >= b.raw; }
};

inline fixed128 fadd(fixed128 a, fixed128 b) {
    const u128 s = a.raw + b.raw;
    if (s < a.raw)
        throw std::overflow_error("fixed-point add overflow");
    return fixed128::from_raw(s);
}

inline fixed128 fsub(fixed128 a, fixed128 b) {
    if (b.raw > a.raw)
        throw std::underflow_error("fixed-point subtract underflow");
    return fixed128::from_raw(a.raw - b.raw);
}

// Truncating Q64.64 multiply.
inline fixed128 fmul(fixed128 a, fixed128 b) {
    const U256 p = mul_full_u128(a.raw, b.raw);
    if (hi64(p.hi) != 0 || (p.hi >> 64) != 0)
        throw std::overflow_error("fixed-point multiply overflow");
    return fixed128::from_raw((p.hi << 64) | (p.lo >> 64));
}

// Truncating Q64.64 divide: floor(a / b) on the real values.
inline fixed128 fdiv(fixed128 a, fixed128 b) {
    U256 n;
    n.hi = a.raw >> 64;
    n.lo = a.raw << 64;
    return fixed128::from_raw(div_u256_u128(n, b.raw));
}

// Parse a non-negative decimal literal ("0.025", "12", "1.5") into Q64.64,
// truncating beyond 2^-64. Rejects anything else.
inline fixed128 parse_fixed_decimal(std::string_view text) {
    if (text.empty())
        throw std::invalid_argument("empty fixed-point literal");
    uint64_t int_part = 0;
    size_t i = 0;
    bool any_digit = false;
    for (; i < text.size() && text[i] != '.'; ++i) {
        if (text[i] < '0' || text[i] > '9')
            throw std::invalid_argument("bad fixed-point literal: " + std::string(text));
        any_digit = true;
        const uint64_t d = static_cast<uint64_t>(text[i] - '0');
        if (int_part > (UINT64_MAX - d) / 10)
            throw std::overflow_error("fixed-point literal too large");
        int_part = int_part * 10 + d;
    }
    u128 frac_raw = 0;
    if (i < text.size()) { // consume '.'
        ++i;
        uint64_t frac_digits = 0;
        uint64_t frac_value = 0;
        for (; i < text.size(); ++i) {
            if (text[i] < '0' || text[i] > '9')
                throw std::invalid_argument("bad fixed-point literal: " + std::string(text));
            any_digit = true;
            if (frac_digits < 19) {
                frac_value = frac_value * 10 + static_cast<uint64_t>(text[i] - '0');
                ++frac_digits;
            } // further digits are below representable precision
        }
        if (frac_digits > 0) {
            uint64_t pow10 = 1;
            for (uint64_t k = 0; k < frac_digits; ++k)
                pow10 *= 10;
            frac_raw = fixed128::from_ratio(frac_value, pow10).raw;
        }
    }
    if (!any_digit)
        throw std::invalid_argument("bad fixed-point literal: " + std::string(text));
    return fixed128::from_raw((static_cast<u128>(int_part) << 64) | frac_raw);
}

namespace detail {

// exp_table[j] = nearest( e^( -2^(j-64) ) * 2^64 ), j indexing the bit
// position of the Q64.64 argument. Constants frozen from a 60-digit
// arbitrary-precision computation; conformance vectors live in
// tests/vectors/exp_neg.txt.
inline constexpr uint64_t exp_neg_table[70] = {
    0xffffffffffffffffull, 0xfffffffffffffffeull, 0xfffffffffffffffcull, 0xfffffffffffffff8ull,
    0xfffffffffffffff0ull, 0xffffffffffffffe0ull, 0xffffffffffffffc0ull, 0xffffffffffffff80ull,
    0xffffffffffffff00ull, 0xfffffffffffffe00ull, 0xfffffffffffffc00ull, 0xfffffffffffff800ull,
    0xfffffffffffff000ull, 0xffffffffffffe000ull, 0xffffffffffffc000ull, 0xffffffffffff8000ull,
    0xffffffffffff0000ull, 0xfffffffffffe0000ull, 0xfffffffffffc0000ull, 0xfffffffffff80000ull,
    0xfffffffffff00000ull, 0xffffffffffe00000ull, 0xffffffffffc00000ull, 0xffffffffff800000ull,
    0xffffffffff000000ull, 0xfffffffffe000000ull, 0xfffffffffc000000ull, 0xfffffffff8000000ull,
    0xfffffffff0000000ull, 0xffffffffe0000000ull, 0xffffffffc0000000ull, 0xffffffff80000000ull,
    0xffffffff00000000ull, 0xfffffffe00000002ull, 0xfffffffc00000008ull, 0xfffffff800000020ull,
    0xfffffff000000080ull, 0xffffffe000000200ull, 0xffffffc000000800ull, 0xffffff8000002000ull,
    0xffffff0000008000ull, 0xfffffe0000020000ull, 0xfffffc0000080000ull, 0xfffff80000200000ull,
    0xfffff000007ffffdull, 0xffffe00001ffffebull, 0xffffc00007ffff55ull, 0xffff80001ffffaabull,
    0xffff00007fffd555ull, 0xfffe0001fffeaaabull, 0xfffc0007fff55560ull, 0xfff8001fffaaab55ull,
    0xfff0007ffd556000ull, 0xffe001ffeaab5551ull, 0xffc007ff555fff77ull, 0xff801ffaab554446ull,
    0xff007fd55ffdde39ull, 0xfe01feab551127ccull, 0xfc07f55ff77d2494ull, 0xf81fab5445aebc8aull,
    0xf07d5fde38151e73ull, 0xe1eb51276c110c3cull, 0xc75f7cf564105743ull, 0x9b4597e37cb04ff4ull,
    0x5e2d58d8b3bcdf1bull, 0x22a555477f039740ull, 0x04b0556e084f3d1eull, 0x0015fc21041027adull,
    0x000001e355bbaee8ull, 0x000000000003908dull,
};

} // namespace detail

// Deterministic e^(-x) for x >= 0 in Q64.64, table-driven over the bits of
// x. Result is in [0, 1]; underflows to exact zero for x >= 46.
inline fixed128 exp_neg(fixed128 x) {
    if (x.raw == 0)
        return fixed128::one();
    if (x.int_part() >= 46)
        return fixed128::zero();
    u128 acc = static_cast<u128>(1) << 64; // Q64.64 one
    u128 bits = x.raw;                     // < 2^70 here
    for (int j = 0; j < 70 && bits != 0; ++j, bits >>= 1) {
        if (bits & 1) {
            acc = (acc * detail::exp_neg_table[j]) >> 64;
            if (acc == 0)
                return fixed128::zero();
        }
    }
    return fixed128::from_raw(acc);
}

// Chain-trust scores use 32 fractional bits; block weights are integral in
// this unit so a whole block is exactly representable.
using trust_t = uint64_t;
inline constexpr int kTrustFracBits = 32;
inline constexpr trust_t kTrustOne = trust_t{1} << kTrustFracBits;

inline double trust_to_double(trust_t t) {
    return static_cast<double>(t) / static_cast<double>(kTrustOne);
}

} // namespace pulsar

#endif // PULSAR_FIXED_POINT_HPP
