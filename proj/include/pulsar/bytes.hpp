// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_BYTES_HPP
#define PULSAR_BYTES_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "digest.hpp"
#include "fixed_point.hpp"

namespace pulsar {

// Canonical wire encoding: little-endian fixed-width integers, 32-byte raw
// digests, and u32-length-prefixed byte strings, in declared field order.

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ByteWriter {
public:
    void put_u8(uint8_t v) { out_.push_back(v); }

    void put_u32(uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void put_u64(uint64_t v) {
        for (int i = 0; i < 8; ++i)
            out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void put_u128(u128 v) {
        put_u64(lo64(v));
        put_u64(hi64(v));
    }

    void put_digest(const digest256& d) {
        const auto b = d.bytes();
        out_.insert(out_.end(), b.begin(), b.end());
    }

    void put_var_bytes(std::span<const uint8_t> data) {
        if (data.size() > UINT32_MAX)
            throw std::length_error("byte string too long");
        put_u32(static_cast<uint32_t>(data.size()));
        out_.insert(out_.end(), data.begin(), data.end());
    }

    const std::vector<uint8_t>& bytes() const { return out_; }
    std::vector<uint8_t> take() { return std::move(out_); }

private:
    std::vector<uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t get_u8() {
        need(1);
        return data_[pos_++];
    }

    uint32_t get_u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    uint64_t get_u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    u128 get_u128() {
        const uint64_t lo = get_u64();
        const uint64_t hi = get_u64();
        return (static_cast<u128>(hi) << 64) | lo;
    }

    digest256 get_digest() {
        need(32);
        const digest256 d = digest256::from_bytes(data_.data() + pos_);
        pos_ += 32;
        return d;
    }

    std::vector<uint8_t> get_var_bytes() {
        const uint32_t n = get_u32();
        need(n);
        std::vector<uint8_t> v(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return v;
    }

    bool exhausted() const { return pos_ == data_.size(); }
    size_t remaining() const { return data_.size() - pos_; }

private:
    void need(size_t n) const {
        if (data_.size() - pos_ < n)
            throw ParseError("truncated input: need " + std::to_string(n) + " bytes at offset " +
                             std::to_string(pos_));
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

} // namespace pulsar

#endif // PULSAR_BYTES_HPP
