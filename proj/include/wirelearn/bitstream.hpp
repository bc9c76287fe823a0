#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "wirelearn/quant.hpp"

namespace wirelearn {

/// Ordered bit sequence, most-significant-bit-first within every field.
/// The first header_bits bits carry side information (the quantizer scale)
/// that rides outside the noisy payload: the channel never corrupts them and
/// payload accounting does not count them.
struct BitStream {
    std::vector<uint8_t> bits;  // one bit per element, values 0/1
    size_t header_bits = 0;

    size_t size() const { return bits.size(); }
    size_t body_bits() const { return bits.size() - header_bits; }

    void append_uint(uint64_t value, int nbits) {
        for (int i = nbits - 1; i >= 0; --i)
            bits.push_back(static_cast<uint8_t>((value >> i) & 1));
    }

    uint64_t read_uint(size_t pos, int nbits) const {
        if (pos + static_cast<size_t>(nbits) > bits.size())
            throw std::out_of_range("BitStream: read past end");
        uint64_t v = 0;
        for (int i = 0; i < nbits; ++i) v = (v << 1) | bits[pos + i];
        return v;
    }

    /// Big-endian bit packing into bytes; the last byte is zero-padded.
    std::vector<uint8_t> to_bytes() const {
        std::vector<uint8_t> out((bits.size() + 7) / 8, 0);
        for (size_t i = 0; i < bits.size(); ++i)
            if (bits[i]) out[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
        return out;
    }

    static BitStream from_bytes(const std::vector<uint8_t>& bytes, size_t n_bits,
                                size_t header_bits = 0) {
        if (n_bits > bytes.size() * 8) throw std::invalid_argument("from_bytes: too few bytes");
        BitStream s;
        s.header_bits = header_bits;
        s.bits.resize(n_bits);
        for (size_t i = 0; i < n_bits; ++i)
            s.bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1;
        return s;
    }
};

inline uint64_t mask_for_bits(int b) {
    return b >= 64 ? ~uint64_t(0) : ((uint64_t(1) << b) - 1);
}

/// Two's-complement packing of signed codes at width b, preceded by the
/// 32-bit scale field. Out-of-range codes are a caller bug, not channel
/// damage, so they throw.
inline BitStream pack_bits(const QuantizedBlock& block) {
    const int b = block.bits;
    BitStream s;
    s.bits.reserve(32 + block.q.size() * static_cast<size_t>(b));
    uint32_t scale_bits;
    static_assert(sizeof(float) == 4);
    std::memcpy(&scale_bits, &block.scale, 4);
    s.append_uint(scale_bits, 32);
    s.header_bits = 32;
    const int64_t lo = block.code_min(), hi = block.code_max();
    const uint64_t mask = mask_for_bits(b);
    for (int32_t code : block.q) {
        if (code < lo || code > hi) throw std::invalid_argument("pack_bits: code out of range");
        s.append_uint(static_cast<uint64_t>(static_cast<uint32_t>(code)) & mask, b);
    }
    return s;
}

/// Exact inverse of pack_bits on error-free streams; on corrupted streams it
/// decodes whatever bits arrived.
inline QuantizedBlock unpack_bits(const BitStream& s, int b, size_t count) {
    if (!valid_bit_width(b)) throw std::invalid_argument("unpack_bits: bad width");
    if (s.size() < 32 + count * static_cast<size_t>(b))
        throw std::invalid_argument("unpack_bits: stream too short");
    QuantizedBlock block;
    block.bits = b;
    uint32_t scale_bits = static_cast<uint32_t>(s.read_uint(0, 32));
    std::memcpy(&block.scale, &scale_bits, 4);
    block.q.resize(count);
    const uint64_t sign_bit = uint64_t(1) << (b - 1);
    for (size_t i = 0; i < count; ++i) {
        uint64_t u = s.read_uint(32 + i * static_cast<size_t>(b), b);
        if (u & sign_bit) u |= ~mask_for_bits(b);  // sign extend
        block.q[i] = static_cast<int32_t>(static_cast<int64_t>(u));
    }
    return block;
}

/// Raw-sample payload: each token id as a 16-bit unsigned field, then the
/// label repeated in a 2-bit field. No scale header.
inline BitStream pack_token_payload(const std::vector<int32_t>& ids, int label) {
    BitStream s;
    s.bits.reserve(ids.size() * 16 + 2);
    for (int32_t id : ids) {
        if (id < 0 || id > 0xFFFF) throw std::invalid_argument("pack_token_payload: id out of range");
        s.append_uint(static_cast<uint64_t>(id), 16);
    }
    s.append_uint(label ? 0b11u : 0b00u, 2);
    return s;
}

struct TokenPayload {
    std::vector<int32_t> ids;
    int label = 0;
};

/// Ids outside [0, max_id] clamp to the reserved id 0; the 2-bit label field
/// majority-decodes, with a one-flip tie resolved by its first bit.
inline TokenPayload unpack_token_payload(const BitStream& s, size_t count, int32_t max_id) {
    if (s.size() < count * 16 + 2) throw std::invalid_argument("unpack_token_payload: short stream");
    TokenPayload out;
    out.ids.resize(count);
    for (size_t i = 0; i < count; ++i) {
        int32_t id = static_cast<int32_t>(s.read_uint(i * 16, 16));
        out.ids[i] = (id >= 0 && id <= max_id) ? id : 0;
    }
    uint64_t lab = s.read_uint(count * 16, 2);
    out.label = (lab == 0b11) ? 1 : (lab == 0b00) ? 0 : static_cast<int>((lab >> 1) & 1);
    return out;
}

}  // namespace wirelearn
