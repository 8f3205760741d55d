// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_WIDE_INT_HPP
#define PULSAR_WIDE_INT_HPP

#include <array>
#include <cstdint>
#include <stdexcept>

#include "fixed_point.hpp"

namespace pulsar {

// Minimal fixed-width unsigned big integer (N 64-bit limbs, little-endian).
// Wide enough for exact staking-weight arithmetic at any u64 supply.
template <size_t N>
struct BigUInt {
    std::array<uint64_t, N> limb{};

    static BigUInt from_u64(uint64_t v) {
        BigUInt r;
        r.limb[0] = v;
        return r;
    }

    bool is_zero() const {
        for (uint64_t l : limb)
            if (l != 0)
                return false;
        return true;
    }

    int compare(const BigUInt& o) const {
        for (size_t i = N; i-- > 0;) {
            if (limb[i] != o.limb[i])
                return limb[i] < o.limb[i] ? -1 : 1;
        }
        return 0;
    }

    friend bool operator==(const BigUInt& a, const BigUInt& b) { return a.compare(b) == 0; }
    friend bool operator<(const BigUInt& a, const BigUInt& b) { return a.compare(b) < 0; }
    friend bool operator>=(const BigUInt& a, const BigUInt& b) { return a.compare(b) >= 0; }

    BigUInt add(const BigUInt& o) const {
        BigUInt r;
        u128 carry = 0;
        for (size_t i = 0; i < N; ++i) {
            const u128 s = static_cast<u128>(limb[i]) + o.limb[i] + carry;
            r.limb[i] = lo64(s);
            carry = s >> 64;
        }
        if (carry != 0)
            throw std::overflow_error("BigUInt add overflow");
        return r;
    }

    // this - o; requires this >= o.
    BigUInt sub(const BigUInt& o) const {
        BigUInt r;
        uint64_t borrow = 0;
        for (size_t i = 0; i < N; ++i) {
            const u128 a = limb[i];
            const u128 b = static_cast<u128>(o.limb[i]) + borrow;
            if (a >= b) {
                r.limb[i] = static_cast<uint64_t>(a - b);
                borrow = 0;
            } else {
                r.limb[i] = static_cast<uint64_t>((a + (static_cast<u128>(1) << 64)) - b);
                borrow = 1;
            }
        }
        if (borrow != 0)
            throw std::underflow_error("BigUInt sub underflow");
        return r;
    }

    BigUInt mul_u64(uint64_t m) const {
        BigUInt r;
        u128 carry = 0;
        for (size_t i = 0; i < N; ++i) {
            const u128 p = static_cast<u128>(limb[i]) * m + carry;
            r.limb[i] = lo64(p);
            carry = p >> 64;
        }
        if (carry != 0)
            throw std::overflow_error("BigUInt mul overflow");
        return r;
    }

    BigUInt shl_limbs(size_t k) const {
        BigUInt r;
        for (size_t i = N; i-- > k;)
            r.limb[i] = limb[i - k];
        for (size_t i = N - k; i < N; ++i)
            if (limb[i] != 0)
                throw std::overflow_error("BigUInt shift overflow");
        return r;
    }

    bool bit(size_t i) const { return (limb[i / 64] >> (i % 64)) & 1; }

    void set_bit(size_t i) { limb[i / 64] |= uint64_t{1} << (i % 64); }

    // Shift left one bit in place, returning the bit shifted out.
    bool shl1_inplace() {
        bool carry = false;
        for (size_t i = 0; i < N; ++i) {
            const bool next = (limb[i] >> 63) & 1;
            limb[i] = (limb[i] << 1) | (carry ? 1 : 0);
            carry = next;
        }
        return carry;
    }

    // Schoolbook floor division. Deterministic and plenty at desk scale.
    static BigUInt divide(const BigUInt& num, const BigUInt& den, BigUInt* rem_out = nullptr) {
        if (den.is_zero())
            throw std::domain_error("BigUInt division by zero");
        BigUInt quot;
        BigUInt rem;
        for (size_t i = N * 64; i-- > 0;) {
            rem.shl1_inplace();
            if (num.bit(i))
                rem.limb[0] |= 1;
            if (rem >= den) {
                rem = rem.sub(den);
                quot.set_bit(i);
            }
        }
        if (rem_out)
            *rem_out = rem;
        return quot;
    }

    // Low 64 bits; throws if the value does not fit.
    uint64_t to_u64() const {
        for (size_t i = 1; i < N; ++i)
            if (limb[i] != 0)
                throw std::overflow_error("BigUInt does not fit u64");
        return limb[0];
    }
};

using BigUInt384 = BigUInt<6>;

} // namespace pulsar

#endif // PULSAR_WIDE_INT_HPP
