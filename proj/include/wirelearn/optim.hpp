#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wirelearn/tensor.hpp"

namespace wirelearn {

/// Momentum buffers mirroring a parameter list, plus the step hyperparameters.
struct OptimizerState {
    std::vector<Tensor> velocity;
    double learning_rate = 0.01;
    double momentum = 0.9;

    OptimizerState() = default;

    OptimizerState(const std::vector<Tensor*>& params, double lr, double mu)
        : learning_rate(lr), momentum(mu) {
        if (lr <= 0.0) throw std::invalid_argument("OptimizerState: lr must be > 0");
        if (mu < 0.0 || mu >= 1.0) throw std::invalid_argument("OptimizerState: momentum in [0,1)");
        velocity.reserve(params.size());
        for (const Tensor* p : params) velocity.emplace_back(p->shape);
    }
};

/// v <- mu*v + lr*g, then w <- w - v, elementwise.
inline void sgd_momentum_step(const std::vector<Tensor*>& params,
                              const std::vector<Tensor*>& grads,
                              OptimizerState& state) {
    if (params.size() != grads.size() || params.size() != state.velocity.size())
        throw std::invalid_argument("sgd_momentum_step: list size mismatch");
    const float lr = static_cast<float>(state.learning_rate);
    const float mu = static_cast<float>(state.momentum);
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& w = *params[i];
        const Tensor& g = *grads[i];
        Tensor& v = state.velocity[i];
        if (!w.same_shape(g) || !w.same_shape(v))
            throw std::invalid_argument("sgd_momentum_step: shape mismatch");
        if (!g.all_finite())
            throw std::invalid_argument("sgd_momentum_step: non-finite gradient");
        for (size_t j = 0; j < w.size(); ++j) {
            v.data[j] = mu * v.data[j] + lr * g.data[j];
            w.data[j] -= v.data[j];
        }
    }
}

/// Rescales the whole gradient set so its global L2 norm is at most tau.
/// Norms within one part in 1e6 of tau count as already clipped; that slack
/// absorbs float rounding, so clipping twice is bitwise identical to
/// clipping once.
inline void clip_by_global_norm(const std::vector<Tensor*>& grads, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("clip_by_global_norm: tau must be > 0");
    double norm = global_norm(grads);
    if (norm <= tau * (1.0 + 1e-6) || norm == 0.0) return;
    float scale = static_cast<float>(tau / norm);
    for (Tensor* g : grads)
        for (float& v : g->data) v *= scale;
}

inline void clip_by_global_norm(Tensor& grad, double tau) {
    std::vector<Tensor*> one{&grad};
    clip_by_global_norm(one, tau);
}

/// Binary cross-entropy on a single probability. The prediction is clamped
/// to [eps, 1-eps] before the log, and the returned gradient is the analytic
/// derivative at the clamped point.
struct BceResult {
    double loss;
    double dloss_dpred;
};

inline BceResult bce_loss(double pred, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1");
    constexpr double eps = 1e-7;
    double p = pred < eps ? eps : (pred > 1.0 - eps ? 1.0 - eps : pred);
    double loss = label == 1 ? -std::log(p) : -std::log(1.0 - p);
    double grad = label == 1 ? -1.0 / p : 1.0 / (1.0 - p);
    return {loss, grad};
}

/// Step decay: 10% reduction every 5 epochs.
inline double lr_schedule(double initial_lr, int epoch_index) {
    if (epoch_index < 0) throw std::invalid_argument("lr_schedule: negative epoch");
    return initial_lr * std::pow(0.9, epoch_index / 5);
}

}  // namespace wirelearn
