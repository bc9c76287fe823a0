#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "wirelearn/bitstream.hpp"
#include "wirelearn/channel.hpp"
#include "wirelearn/model.hpp"
#include "wirelearn/optim.hpp"
#include "wirelearn/protocols.hpp"
#include "wirelearn/quant.hpp"

namespace wirelearn {

enum class Scheme { Cl, Fl, Sl };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Cl: return "cl";
        case Scheme::Fl: return "fl";
        case Scheme::Sl: return "sl";
    }
    return "?";
}

/// Per-dimension min-max statistics fitted on training pairs. Constant
/// dimensions map to zero.
struct NormStats {
    std::vector<float> lo, hi;

    static NormStats fit(const std::vector<Tensor>& xs) {
        if (xs.empty()) throw std::invalid_argument("NormStats: empty fit set");
        NormStats st;
        st.lo.assign(xs[0].size(), std::numeric_limits<float>::max());
        st.hi.assign(xs[0].size(), std::numeric_limits<float>::lowest());
        for (const Tensor& x : xs) {
            if (x.size() != st.lo.size()) throw std::invalid_argument("NormStats: ragged inputs");
            for (size_t i = 0; i < x.size(); ++i) {
                st.lo[i] = std::min(st.lo[i], x.data[i]);
                st.hi[i] = std::max(st.hi[i], x.data[i]);
            }
        }
        return st;
    }

    Tensor apply(const Tensor& x) const {
        Tensor y = x;
        for (size_t i = 0; i < y.size(); ++i) {
            float range = hi[i] - lo[i];
            y.data[i] = range > 0.0f ? (y.data[i] - lo[i]) / range : 0.0f;
        }
        return y;
    }
};

/// Mean squared elementwise error between one reconstruction and its target.
inline double mse_error(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mse_error: shape mismatch");
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        sq += d * d;
    }
    return a.size() ? sq / static_cast<double>(a.size()) : 0.0;
}

/// Fixed signed sparse random projection: every input dimension feeds a
/// small number of output taps with +/-1 weights derived by hashing, which
/// keeps an 89k-to-448 reduction tractable per sample.
struct SparseProjection {
    int out_dim = 448;
    int taps = 4;
    uint64_t seed = 0;

    Tensor apply(const Tensor& x) const {
        Tensor y({out_dim});
        const double scale = 1.0 / std::sqrt(static_cast<double>(taps));
        for (size_t i = 0; i < x.size(); ++i) {
            float v = x.data[i];
            if (v == 0.0f) continue;
            for (int t = 0; t < taps; ++t) {
                uint64_t h = splitmix64(seed ^ splitmix64(i * static_cast<uint64_t>(taps) + t));
                size_t j = h % static_cast<uint64_t>(out_dim);
                float sign = (h >> 63) ? 1.0f : -1.0f;
                y.data[j] += sign * v;
            }
        }
        for (float& v : y.data) v = static_cast<float>(v * scale);
        return y;
    }
};

// ---------------------------------------------------------------------------
// Scheme observables: what an eavesdropper on the uplink actually sees.
// ---------------------------------------------------------------------------

inline Tensor target_vector(const EncodedSample& s) {
    Tensor t({static_cast<int>(s.ids.size())});
    for (size_t i = 0; i < s.ids.size(); ++i) t.data[i] = static_cast<float>(s.ids[i]);
    return t;
}

/// CL ships the tokens themselves; optionally pass them through the channel.
inline Tensor observable_cl(const EncodedSample& s, const RunConfig& cfg, bool over_channel,
                            RngStream& chan_rng) {
    if (!over_channel) return target_vector(s);
    BitStream payload = pack_token_payload(s.ids, s.label);
    TransmitResult tr = transmit(payload, cfg.channel, chan_rng);
    TokenPayload decoded = unpack_token_payload(tr.received, s.ids.size(),
                                                static_cast<int32_t>(cfg.dims.vocab_words));
    Tensor t({static_cast<int>(decoded.ids.size())});
    for (size_t i = 0; i < decoded.ids.size(); ++i) t.data[i] = static_cast<float>(decoded.ids[i]);
    return t;
}

/// FL exposes the uplinked weights. The per-sample unit of leakage is the
/// dequantized single-step update delta from the known broadcast weights,
/// reduced by the fixed sparse projection.
inline Tensor observable_fl(const EncodedSample& s, SentimentModel& scratch,
                            const Tensor& base_flat, const RunConfig& cfg,
                            const SparseProjection& proj) {
    scratch.zero_grads();
    SentimentModel::Cache cache;
    float p = scratch.forward(s.ids, cache);
    BceResult r = bce_loss(p, s.label);
    scratch.backward(static_cast<float>(r.dloss_dpred), cache);
    Tensor g = flatten_tensors(
        std::vector<const Tensor*>(scratch.grads().begin(), scratch.grads().end()));
    Tensor w_step({static_cast<int>(base_flat.size())});
    const float lr = static_cast<float>(cfg.lr);
    for (size_t i = 0; i < w_step.size(); ++i)
        w_step.data[i] = base_flat.data[i] - lr * g.data[i];
    QuantizedBlock block = quantize(w_step, cfg.quant_bits);
    Tensor w_hat = dequantize(block);
    for (size_t i = 0; i < w_hat.size(); ++i) w_hat.data[i] -= base_flat.data[i];
    return proj.apply(w_hat);
}

/// SL exposes the compressed cut activations at the transport width.
inline Tensor observable_sl(const EncodedSample& s, const SplitModel& split,
                            const RunConfig& cfg) {
    SplitModel::UserCache cache;
    Tensor act = split.user_forward(s.ids, cache);
    QuantizedBlock block = quantize(act, cfg.sl_transport_bits);
    return dequantize(block);
}

// ---------------------------------------------------------------------------
// Adversary: dense autoencoder-shaped regressor from the observable to the
// normalized token vector.
// ---------------------------------------------------------------------------

struct Adversary {
    Dense l1, l2, l3, l4;

    Adversary() = default;
    Adversary(int in_dim, int out_dim, uint64_t seed, uint64_t user)
        : l1(in_dim, 128, Act::Relu),
          l2(128, 64, Act::Relu),
          l3(64, 128, Act::Relu),
          l4(128, out_dim, Act::Linear) {
        RngStream rng(seed, "init.adversary", user);
        glorot_init(l1.w, in_dim, 128, rng);
        glorot_init(l2.w, 128, 64, rng);
        glorot_init(l3.w, 64, 128, rng);
        glorot_init(l4.w, 128, out_dim, rng);
    }

    struct Cache {
        Dense::Cache c1, c2, c3, c4;
    };

    Tensor forward(const Tensor& x, Cache& cache) const {
        Tensor h = l1.forward(x, cache.c1);
        h = l2.forward(h, cache.c2);
        h = l3.forward(h, cache.c3);
        return l4.forward(h, cache.c4);
    }

    void backward(const Tensor& dout, Cache& cache) {
        Tensor d = l4.backward(dout, cache.c4);
        d = l3.backward(d, cache.c3);
        d = l2.backward(d, cache.c2);
        l1.backward(d, cache.c1);
    }

    std::vector<Tensor*> params() {
        return {&l1.w, &l1.b, &l2.w, &l2.b, &l3.w, &l3.b, &l4.w, &l4.b};
    }
    std::vector<Tensor*> grads() {
        return {&l1.dw, &l1.db, &l2.dw, &l2.db, &l3.dw, &l3.db, &l4.dw, &l4.db};
    }
    void zero_grads() {
        for (Tensor* g : grads()) g->zero();
    }
};

struct PairSet {
    std::vector<Tensor> observables;  // raw, normalized later
    std::vector<Tensor> targets;      // raw token vectors
};

struct PrivacyConfig {
    size_t pairs_per_user = 600;
    int epochs = 60;
    size_t batch_size = 512;
    bool over_channel = false;  // CL observable through the channel instead of clean
};

struct PrivacyReport {
    std::vector<double> per_user;
    double mean = 0.0;
};

/// Minimizes MSE on the training pairs with the run's optimizer settings
/// (momentum SGD plus the step-decay schedule).
inline Adversary train_adversary(const std::vector<Tensor>& obs, const std::vector<Tensor>& tgt,
                                 int epochs, size_t batch_size, const RunConfig& cfg,
                                 uint64_t user) {
    if (obs.empty() || obs.size() != tgt.size())
        throw std::invalid_argument("train_adversary: empty or mismatched pairs");
    const int in_dim = static_cast<int>(obs[0].size());
    const int out_dim = static_cast<int>(tgt[0].size());
    Adversary adv(in_dim, out_dim, cfg.seed, user);
    OptimizerState opt(adv.params(), cfg.lr, cfg.momentum);
    std::vector<size_t> order(obs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Adversary::Cache cache;
    for (int e = 0; e < epochs; ++e) {
        opt.learning_rate = lr_schedule(cfg.lr, e);
        RngStream shuffle_rng(cfg.seed, "adversary.shuffle", user, static_cast<uint64_t>(e));
        shuffle_rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += batch_size) {
            size_t end = std::min(order.size(), start + batch_size);
            adv.zero_grads();
            for (size_t i = start; i < end; ++i) {
                const Tensor& x = obs[order[i]];
                const Tensor& y = tgt[order[i]];
                Tensor pred = adv.forward(x, cache);
                Tensor dout({out_dim});
                const float k = 2.0f / (static_cast<float>(out_dim) * (end - start));
                for (int j = 0; j < out_dim; ++j)
                    dout.data[j] = k * (pred.data[j] - y.data[j]);
                adv.backward(dout, cache);
            }
            sgd_momentum_step(adv.params(), adv.grads(), opt);
        }
    }
    return adv;
}

inline double reconstruction_error(Adversary& adv, const std::vector<Tensor>& obs,
                                   const std::vector<Tensor>& tgt) {
    if (obs.empty()) throw std::invalid_argument("reconstruction_error: empty pairs");
    Adversary::Cache cache;
    double sum = 0.0;
    for (size_t i = 0; i < obs.size(); ++i)
        sum += mse_error(adv.forward(obs[i], cache), tgt[i]);
    return sum / static_cast<double>(obs.size());
}

/// Builds per-user (observable, input) pairs, trains one adversary per user
/// on a seeded 90/10 split, and reports the held-out reconstruction errors.
/// fl_model: the broadcast weights the FL delta is taken from.
/// sl_model: the split whose cut activations are observed.
inline PrivacyReport run_privacy_eval(Scheme scheme,
                                      const std::vector<std::vector<EncodedSample>>& shards,
                                      const RunConfig& cfg, const PrivacyConfig& pcfg,
                                      const SentimentModel* fl_model = nullptr,
                                      const SplitModel* sl_model = nullptr) {
    if (scheme == Scheme::Fl && !fl_model)
        throw std::invalid_argument("run_privacy_eval: FL needs the broadcast model");
    if (scheme == Scheme::Sl && !sl_model)
        throw std::invalid_argument("run_privacy_eval: SL needs the split model");
    PrivacyReport report;
    SparseProjection proj{cfg.dims.cut_width(), 4, splitmix64(cfg.seed ^ fnv1a("privacy.proj"))};
    for (size_t u = 0; u < shards.size(); ++u) {
        const auto& shard = shards[u];
        if (shard.empty()) throw std::invalid_argument("run_privacy_eval: empty shard");
        size_t n = std::min(pcfg.pairs_per_user, shard.size());
        PairSet pairs;
        pairs.observables.reserve(n);
        pairs.targets.reserve(n);
        RngStream chan_rng(cfg.seed, "privacy.chan", u);
        SentimentModel scratch;
        Tensor base_flat;
        if (scheme == Scheme::Fl) {
            scratch = *fl_model;
            base_flat = flatten_params(scratch);
        }
        for (size_t i = 0; i < n; ++i) {
            const EncodedSample& s = shard[i];
            switch (scheme) {
                case Scheme::Cl:
                    pairs.observables.push_back(
                        observable_cl(s, cfg, pcfg.over_channel, chan_rng));
                    break;
                case Scheme::Fl:
                    pairs.observables.push_back(
                        observable_fl(s, scratch, base_flat, cfg, proj));
                    break;
                case Scheme::Sl:
                    pairs.observables.push_back(observable_sl(s, *sl_model, cfg));
                    break;
            }
            pairs.targets.push_back(target_vector(s));
        }
        // seeded 90/10 train/eval split of the pairs
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), size_t{0});
        RngStream split_rng(cfg.seed, "privacy.split", u);
        split_rng.shuffle(order);
        size_t n_eval = std::max<size_t>(1, n / 10);
        size_t n_train = n - n_eval;
        if (n_train == 0) throw std::invalid_argument("run_privacy_eval: too few pairs");
        std::vector<Tensor> train_obs, train_tgt, eval_obs, eval_tgt;
        for (size_t i = 0; i < n; ++i) {
            if (i < n_train) {
                train_obs.push_back(pairs.observables[order[i]]);
                train_tgt.push_back(pairs.targets[order[i]]);
            } else {
                eval_obs.push_back(pairs.observables[order[i]]);
                eval_tgt.push_back(pairs.targets[order[i]]);
            }
        }
        NormStats obs_stats = NormStats::fit(train_obs);
        NormStats tgt_stats = NormStats::fit(train_tgt);
        auto norm_all = [](const NormStats& st, std::vector<Tensor>& xs) {
            for (Tensor& x : xs) x = st.apply(x);
        };
        norm_all(obs_stats, train_obs);
        norm_all(obs_stats, eval_obs);
        norm_all(tgt_stats, train_tgt);
        norm_all(tgt_stats, eval_tgt);
        Adversary adv = train_adversary(train_obs, train_tgt, pcfg.epochs, pcfg.batch_size,
                                        cfg, u);
        report.per_user.push_back(reconstruction_error(adv, eval_obs, eval_tgt));
    }
    report.mean = std::accumulate(report.per_user.begin(), report.per_user.end(), 0.0) /
                  static_cast<double>(report.per_user.size());
    return report;
}

}  // namespace wirelearn
