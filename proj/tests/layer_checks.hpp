// Per-layer finite-difference checks reused by the unit and acceptance
// suites. Each returns the worst vector relative error across the layer's
// parameter tensors and input, taken against the double-precision reference
// in gradcheck.hpp, and also verifies that the production float32 forward
// tracks the reference.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gradcheck.hpp"
#include "wirelearn/layers.hpp"
#include "wirelearn/model.hpp"
#include "wirelearn/optim.hpp"

namespace layer_checks {

using namespace wirelearn;
using gradcheck::check_against_reference;
using gradcheck::dvec;
using gradcheck::make_probe;
using gradcheck::max_abs_diff;
using gradcheck::probe_loss;
using gradcheck::to_doubles;

constexpr double kForwardTol = 1e-4;  // float32 forward vs double reference

inline Tensor random_tensor(const std::vector<int>& shape, RngStream& rng, double scale = 1.0) {
    Tensor t(shape);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-scale, scale));
    return t;
}

inline void require_forward_close(const Tensor& produced, const dvec& reference) {
    if (max_abs_diff(produced, reference) > kForwardTol)
        throw std::runtime_error("forward pass diverges from the double reference");
}

inline double check_dense(uint64_t seed, Act act) {
    RngStream rng(seed, "gc.dense");
    Dense layer(6, 5, act);
    glorot_init(layer.w, 6, 5, rng);
    for (float& v : layer.b.data) v = static_cast<float>(rng.uniform(-0.3, 0.3));
    Tensor x = random_tensor({6}, rng);
    const int act_code = act == Act::Linear ? 0 : act == Act::Relu ? 1 : 2;
    if (act == Act::Relu) {
        // keep pre-activations away from the kink so central differences
        // stay on one side
        dvec z = gradcheck::ref_dense(to_doubles(layer.w), to_doubles(layer.b), to_doubles(x), 0);
        for (int r = 0; r < 5; ++r)
            if (std::fabs(z[static_cast<size_t>(r)]) < 0.05) layer.b.data[r] += 0.1f;
    }
    Tensor probe = make_probe({5}, rng);
    dvec w = to_doubles(layer.w), b = to_doubles(layer.b), xin = to_doubles(x);
    auto loss = [&] { return probe_loss(gradcheck::ref_dense(w, b, xin, act_code), probe); };
    Dense::Cache cache;
    Tensor y = layer.forward(x, cache);
    require_forward_close(y, gradcheck::ref_dense(w, b, xin, act_code));
    Tensor dx = layer.backward(probe, cache);
    double worst = 0.0;
    worst = std::max(worst, check_against_reference(w, loss, to_doubles(layer.dw), rng));
    worst = std::max(worst, check_against_reference(b, loss, to_doubles(layer.db), rng));
    worst = std::max(worst, check_against_reference(xin, loss, to_doubles(dx), rng));
    return worst;
}

inline double check_conv(uint64_t seed) {
    RngStream rng(seed, "gc.conv");
    Conv1d layer(3, 3, 4);
    glorot_init(layer.w, 9, 4, rng);
    for (float& v : layer.b.data) v = static_cast<float>(rng.uniform(-0.3, 0.3));
    Tensor x = random_tensor({7, 3}, rng);
    Tensor probe = make_probe({5, 4}, rng);
    dvec w = to_doubles(layer.w), b = to_doubles(layer.b), xin = to_doubles(x);
    auto loss = [&] { return probe_loss(gradcheck::ref_conv1d(w, b, xin, 7, 3, 3, 4), probe); };
    Conv1d::Cache cache;
    Tensor y = layer.forward(x, cache);
    require_forward_close(y, gradcheck::ref_conv1d(w, b, xin, 7, 3, 3, 4));
    Tensor dx = layer.backward(probe, cache);
    double worst = 0.0;
    worst = std::max(worst, check_against_reference(w, loss, to_doubles(layer.dw), rng));
    worst = std::max(worst, check_against_reference(b, loss, to_doubles(layer.db), rng));
    worst = std::max(worst, check_against_reference(xin, loss, to_doubles(dx), rng));
    return worst;
}

inline double check_pool(uint64_t seed) {
    RngStream rng(seed, "gc.pool");
    MaxPool1d layer;
    Tensor x = random_tensor({8, 3}, rng);
    // separate pooled pairs so the argmax cannot switch under +/-eps
    for (int t = 0; t < 4; ++t)
        for (int c = 0; c < 3; ++c) {
            float& a = x.at2(2 * t, c);
            float& b = x.at2(2 * t + 1, c);
            if (std::fabs(a - b) < 0.05f) b += 0.1f;
        }
    Tensor probe = make_probe({4, 3}, rng);
    dvec xin = to_doubles(x);
    auto loss = [&] { return probe_loss(gradcheck::ref_maxpool2(xin, 8, 3), probe); };
    MaxPool1d::Cache cache;
    Tensor y = layer.forward(x, cache);
    require_forward_close(y, gradcheck::ref_maxpool2(xin, 8, 3));
    Tensor dx = layer.backward(probe, cache);
    return check_against_reference(xin, loss, to_doubles(dx), rng);
}

inline double check_embedding(uint64_t seed) {
    RngStream rng(seed, "gc.emb");
    Embedding layer(11, 4);
    uniform_init(layer.table, 0.8, rng);
    std::vector<int32_t> ids = {3, 0, 7, 3, 10};
    Tensor probe = make_probe({5, 4}, rng);
    dvec table = to_doubles(layer.table);
    auto loss = [&] { return probe_loss(gradcheck::ref_embedding(table, ids, 4), probe); };
    Embedding::Cache cache;
    Tensor y = layer.forward(ids, cache);
    require_forward_close(y, gradcheck::ref_embedding(table, ids, 4));
    layer.dtable.zero();
    layer.backward(probe, cache);
    return check_against_reference(table, loss, to_doubles(layer.dtable), rng);
}

inline double check_lstm(uint64_t seed) {
    RngStream rng(seed, "gc.lstm");
    Lstm layer(4, 5);
    glorot_init(layer.wx, 4, 20, rng);
    glorot_init(layer.wh, 5, 20, rng);
    for (float& v : layer.b.data) v = static_cast<float>(rng.uniform(-0.2, 0.2));
    Tensor x = random_tensor({5, 4}, rng);
    Tensor probe = make_probe({5}, rng);
    dvec wx = to_doubles(layer.wx), wh = to_doubles(layer.wh), b = to_doubles(layer.b),
         xin = to_doubles(x);
    auto loss = [&] { return probe_loss(gradcheck::ref_lstm(wx, wh, b, xin, 5, 4, 5), probe); };
    Lstm::Cache cache;
    Tensor y = layer.forward(x, cache);
    require_forward_close(y, gradcheck::ref_lstm(wx, wh, b, xin, 5, 4, 5));
    Tensor dx = layer.backward(probe, cache);
    double worst = 0.0;
    worst = std::max(worst, check_against_reference(wx, loss, to_doubles(layer.dwx), rng));
    worst = std::max(worst, check_against_reference(wh, loss, to_doubles(layer.dwh), rng));
    worst = std::max(worst, check_against_reference(b, loss, to_doubles(layer.db), rng));
    worst = std::max(worst, check_against_reference(xin, loss, to_doubles(dx), rng));
    return worst;
}

inline double check_sigmoid(uint64_t seed) {
    RngStream rng(seed, "gc.sig");
    Sigmoid layer;
    Tensor x = random_tensor({6}, rng, 2.0);
    Tensor probe = make_probe({6}, rng);
    dvec xin = to_doubles(x);
    auto loss = [&] {
        dvec y = xin;
        for (double& v : y) v = gradcheck::ref_sigmoid(v);
        return probe_loss(y, probe);
    };
    Sigmoid::Cache cache;
    layer.forward(x, cache);
    Tensor dx = layer.backward(probe, cache);
    return check_against_reference(xin, loss, to_doubles(dx), rng);
}

/// The compression pair: encoder into decoder, checked end to end.
inline double check_codec(uint64_t seed) {
    RngStream rng(seed, "gc.codec");
    Dense enc(16, 4, Act::Linear), dec(4, 16, Act::Linear);
    glorot_init(enc.w, 16, 4, rng);
    glorot_init(dec.w, 4, 16, rng);
    Tensor x = random_tensor({16}, rng);
    Tensor probe = make_probe({16}, rng);
    dvec ew = to_doubles(enc.w), eb = to_doubles(enc.b);
    dvec dw = to_doubles(dec.w), db = to_doubles(dec.b);
    dvec xin = to_doubles(x);
    auto loss = [&] {
        return probe_loss(
            gradcheck::ref_dense(dw, db, gradcheck::ref_dense(ew, eb, xin, 0), 0), probe);
    };
    Dense::Cache c1, c2;
    Tensor y = dec.forward(enc.forward(x, c1), c2);
    require_forward_close(y, gradcheck::ref_dense(dw, db, gradcheck::ref_dense(ew, eb, xin, 0), 0));
    Tensor d = dec.backward(probe, c2);
    Tensor dx = enc.backward(d, c1);
    double worst = 0.0;
    worst = std::max(worst, check_against_reference(ew, loss, to_doubles(enc.dw), rng));
    worst = std::max(worst, check_against_reference(dw, loss, to_doubles(dec.dw), rng));
    worst = std::max(worst, check_against_reference(xin, loss, to_doubles(dx), rng));
    return worst;
}

inline double check_bce(uint64_t seed) {
    RngStream rng(seed, "gc.bce");
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
        double p = rng.uniform(0.05, 0.95);
        int label = rng.uniform() < 0.5 ? 0 : 1;
        const double eps = 1e-6;
        double up = bce_loss(p + eps, label).loss;
        double down = bce_loss(p - eps, label).loss;
        double numeric = (up - down) / (2 * eps);
        double analytic = bce_loss(p, label).dloss_dpred;
        worst = std::max(worst, std::fabs(analytic - numeric) / std::fabs(numeric));
    }
    return worst;
}

struct LayerCheck {
    const char* name;
    double (*fn)(uint64_t);
};

inline std::vector<LayerCheck> all_layer_checks() {
    return {
        {"embedding", &check_embedding},
        {"conv", &check_conv},
        {"pool", &check_pool},
        {"lstm", &check_lstm},
        {"dense_relu", +[](uint64_t s) { return check_dense(s, Act::Relu); }},
        {"dense_linear", +[](uint64_t s) { return check_dense(s, Act::Linear); }},
        {"sigmoid_dense", +[](uint64_t s) { return check_dense(s, Act::Sigmoid); }},
        {"sigmoid", &check_sigmoid},
        {"codec", &check_codec},
    };
}

}  // namespace layer_checks
