#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wirelearn/tensor.hpp"

namespace wirelearn {

inline bool valid_bit_width(int b) { return b == 4 || b == 8 || b == 16 || b == 32; }

/// Signed integer codes plus the positive scale that maps them back to
/// floats. The all-zero input is the one degenerate case: codes all zero
/// with a sentinel scale of 1.0, so dequantization stays well defined.
struct QuantizedBlock {
    std::vector<int32_t> q;
    float scale = 1.0f;
    int bits = 8;

    int64_t code_min() const { return -(int64_t(1) << (bits - 1)); }
    int64_t code_max() const { return (int64_t(1) << (bits - 1)) - 1; }
};

/// Symmetric ceil quantization: scale = max|W| / (2^(b-1) - 1),
/// q = ceil(W / scale).
inline QuantizedBlock quantize(const Tensor& w, int bits) {
    if (!valid_bit_width(bits)) throw std::invalid_argument("quantize: bits must be 4/8/16/32");
    if (!w.all_finite()) throw std::invalid_argument("quantize: non-finite input");
    QuantizedBlock block;
    block.bits = bits;
    block.q.resize(w.size());
    float maxabs = 0.0f;
    for (float v : w.data) maxabs = std::max(maxabs, std::fabs(v));
    const double levels = static_cast<double>((int64_t(1) << (bits - 1)) - 1);
    if (maxabs == 0.0f) {
        block.scale = 1.0f;
        return block;
    }
    // The transmitted scale is a 32-bit float; codes are derived from it.
    block.scale = static_cast<float>(static_cast<double>(maxabs) / levels);
    // long double keeps the max element at exactly +/-levels instead of
    // rounding across the ceil boundary at b=32
    const long double s = static_cast<long double>(block.scale);
    const int64_t lo = block.code_min(), hi = block.code_max();
    for (size_t i = 0; i < w.size(); ++i) {
        long double r = static_cast<long double>(w.data[i]) / s;
        int64_t code = static_cast<int64_t>(std::ceil(r));
        if (code < lo) code = lo;
        if (code > hi) code = hi;
        block.q[i] = static_cast<int32_t>(code);
    }
    return block;
}

/// q * scale as float32 storage.
inline Tensor dequantize(const QuantizedBlock& block) {
    Tensor out({static_cast<int>(block.q.size())});
    const double s = static_cast<double>(block.scale);
    for (size_t i = 0; i < block.q.size(); ++i)
        out.data[i] = static_cast<float>(block.q[i] * s);
    return out;
}

/// Exact (double) reconstruction of one element; float32 storage rounds by
/// more than one quantization step at b=32, so bound checks use this.
inline double dequantize_exact(const QuantizedBlock& block, size_t i) {
    return static_cast<double>(block.q[i]) * static_cast<double>(block.scale);
}

}  // namespace wirelearn
