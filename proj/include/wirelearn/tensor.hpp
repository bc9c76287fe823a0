#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace wirelearn {

/// Dense row-major float32 array. Shapes are small here (the whole model is
/// under 200k parameters), so everything is plain contiguous storage.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel(shape), 0.0f) {}

    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel(shape) != data.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static size_t numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    float operator[](size_t i) const { return data[i]; }
    float& operator[](size_t i) { return data[i]; }

    // 2-D row-major access; only valid when shape has two dims.
    float at2(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }
    float& at2(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }

    void zero() { std::fill(data.begin(), data.end(), 0.0f); }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline double global_norm(const std::vector<const Tensor*>& tensors) {
    double sq = 0.0;
    for (const Tensor* t : tensors)
        for (float v : t->data) sq += static_cast<double>(v) * v;
    return std::sqrt(sq);
}

inline double global_norm(const std::vector<Tensor*>& tensors) {
    std::vector<const Tensor*> cs(tensors.begin(), tensors.end());
    return global_norm(cs);
}

}  // namespace wirelearn
