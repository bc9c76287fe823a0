#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "wirelearn/channel.hpp"
#include "wirelearn/data.hpp"
#include "wirelearn/energy.hpp"
#include "wirelearn/model.hpp"
#include "wirelearn/optim.hpp"
#include "wirelearn/quant.hpp"

namespace wirelearn {

enum class Transport {
    Channel,  // quantize, pack, modulate, fade, add noise
    Perfect   // identity transport; no quantization, no accounting
};

/// Everything the protocol loops need. The CLI layer builds one of these
/// from user-facing flags.
struct RunConfig {
    uint64_t seed = 42;
    ModelDims dims;
    ChannelConfig channel;
    Transport transport = Transport::Channel;
    int quant_bits = 8;
    int cycles = 7;
    int local_epochs = 5;
    size_t batch_size = 512;
    double lr = 0.01;
    double momentum = 0.9;
    double clip_tau = 0.5;             // split learning only
    double sl_cycle_fraction = 0.04;   // share of the shard consumed per cycle
    int sl_transport_bits = 16;
    bool fl_downlink_channel = false;  // default: error-free broadcast
    bool parallel_users = false;
    double joules_per_flop = 1e-9;
    double co2_g_per_joule = 7.7e-5;
};

/// Per-cycle record. Bits are exactly what crossed the noisy channel
/// (headers excluded); comm energy prices the user-side uplink only.
struct RoundReport {
    int cycle = 0;
    double train_loss = 0.0;
    double accuracy = 0.0;
    uint64_t uplink_bits = 0;
    uint64_t downlink_bits = 0;
    double comm_energy_j = 0.0;
    double compute_energy_j = 0.0;
    double co2_g = 0.0;
    double wall_time_s = 0.0;
};

namespace detail {

template <typename Fn>
inline void for_each_user(size_t n, bool parallel, Fn&& fn) {
    if (!parallel || n <= 1) {
        for (size_t u = 0; u < n; ++u) fn(u);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(n);
    workers.reserve(n);
    for (size_t u = 0; u < n; ++u)
        workers.emplace_back([&, u] {
            try {
                fn(u);
            } catch (...) {
                errors[u] = std::current_exception();
            }
        });
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

}  // namespace detail

/// Fraction of correct predictions; the decision threshold is 0.5 on the
/// sigmoid output.
inline double evaluate(const SentimentModel& model, const std::vector<EncodedSample>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    size_t correct = 0;
    SentimentModel::Cache cache;
    for (const auto& s : test) {
        float p = model.forward(s.ids, cache);
        int pred = p >= 0.5f ? 1 : 0;
        if (pred == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline double evaluate_split(const SplitModel& split, const std::vector<EncodedSample>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    size_t correct = 0;
    SplitModel::UserCache uc;
    SplitModel::ServerCache sc;
    for (const auto& s : test) {
        Tensor act = split.user_forward(s.ids, uc);
        float p = split.server_forward(act, sc);
        if ((p >= 0.5f ? 1 : 0) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

/// One epoch of minibatch SGD with momentum. Gradients are batch means;
/// the fc1 weight decay lands once per step. A batch whose (corrupted-weight)
/// gradients come out non-finite is skipped rather than aborting the run.
inline double train_one_epoch(SentimentModel& model, const std::vector<EncodedSample>& samples,
                              size_t batch_size, OptimizerState& opt, RngStream& shuffle_rng) {
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    size_t loss_count = 0;
    SentimentModel::Cache cache;
    auto params = model.params();
    for (size_t start = 0; start < order.size(); start += batch_size) {
        size_t end = std::min(order.size(), start + batch_size);
        model.zero_grads();
        for (size_t i = start; i < end; ++i) {
            const EncodedSample& s = samples[order[i]];
            float p = model.forward(s.ids, cache);
            BceResult r = bce_loss(p, s.label);
            loss_sum += r.loss;
            model.backward(static_cast<float>(r.dloss_dpred), cache);
        }
        loss_count += end - start;
        model.scale_grads(1.0f / static_cast<float>(end - start));
        model.apply_fc1_l2();
        bool finite = true;
        for (const Tensor* g : model.grads())
            if (!g->all_finite()) {
                finite = false;
                break;
            }
        if (finite) sgd_momentum_step(params, model.grads(), opt);
    }
    return loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
}

// ---------------------------------------------------------------------------
// Federated learning
// ---------------------------------------------------------------------------

struct FlState {
    SentimentModel global;
    std::vector<Tensor> user_start;  // broadcast each user begins the cycle from
    int cycle = 0;
};

inline FlState make_fl_state(const RunConfig& cfg, size_t n_users) {
    FlState st;
    st.global = build_model(cfg.seed, cfg.dims);
    st.user_start.assign(n_users, flatten_params(st.global));
    return st;
}

/// One communication cycle: local epochs per user, quantized uplink over the
/// channel, FedAvg aggregation, broadcast. Bit errors degrade the update;
/// they never abort the round.
inline RoundReport fl_round(FlState& state, const std::vector<std::vector<EncodedSample>>& shards,
                            const RunConfig& cfg) {
    detail::Timer timer;
    const size_t n_users = shards.size();
    if (state.user_start.size() != n_users)
        throw std::invalid_argument("fl_round: state/shard user count mismatch");
    const size_t n_params = state.global.param_count();
    std::vector<Tensor> received(n_users);
    std::vector<double> user_loss(n_users, 0.0);
    std::vector<uint64_t> up_bits(n_users, 0);
    std::vector<double> up_energy(n_users, 0.0);
    uint64_t samples_trained = 0;
    for (const auto& shard : shards) samples_trained += shard.size();
    samples_trained *= static_cast<uint64_t>(cfg.local_epochs);

    detail::for_each_user(n_users, cfg.parallel_users, [&](size_t u) {
        SentimentModel local = state.global;  // shapes; weights overwritten below
        unflatten_params(local, state.user_start[u]);
        OptimizerState opt(local.params(), cfg.lr, cfg.momentum);
        double loss_acc = 0.0;
        for (int j = 0; j < cfg.local_epochs; ++j) {
            int epoch_index = state.cycle * cfg.local_epochs + j;
            opt.learning_rate = lr_schedule(cfg.lr, epoch_index);
            RngStream shuffle_rng(cfg.seed, "fl.shuffle", u, static_cast<uint64_t>(epoch_index));
            loss_acc += train_one_epoch(local, shards[u], cfg.batch_size, opt, shuffle_rng);
        }
        user_loss[u] = cfg.local_epochs ? loss_acc / cfg.local_epochs : 0.0;
        Tensor flat = flatten_params(local);
        if (cfg.transport == Transport::Perfect) {
            received[u] = std::move(flat);
        } else {
            QuantizedBlock block = quantize(flat, cfg.quant_bits);
            BitStream stream = pack_bits(block);
            RngStream chan_rng(cfg.seed, "fl.chan.up", u, static_cast<uint64_t>(state.cycle));
            TransmitResult tr = transmit(stream, cfg.channel, chan_rng);
            up_bits[u] = tr.body_bits;
            up_energy[u] = comm_energy(tr.body_bits, cfg.channel, tr.fading);
            QuantizedBlock rx = unpack_bits(tr.received, cfg.quant_bits, flat.size());
            received[u] = dequantize(rx);
        }
    });

    // FedAvg in user order (order-stable float summation keeps runs bitwise
    // identical whether or not users trained in parallel)
    Tensor mean = received[0];
    for (size_t u = 1; u < n_users; ++u)
        for (size_t i = 0; i < mean.size(); ++i) mean.data[i] += received[u].data[i];
    const float inv_n = 1.0f / static_cast<float>(n_users);
    for (float& v : mean.data) v *= inv_n;
    unflatten_params(state.global, mean);

    RoundReport report;
    report.cycle = state.cycle + 1;
    report.train_loss =
        std::accumulate(user_loss.begin(), user_loss.end(), 0.0) / static_cast<double>(n_users);
    for (size_t u = 0; u < n_users; ++u) {
        report.uplink_bits += up_bits[u];
        report.comm_energy_j += up_energy[u];
    }

    // Broadcast of the new global model. Error-free by default; the
    // symmetric-impairment mode pushes a quantized copy through a fresh
    // channel draw per user.
    if (cfg.transport == Transport::Perfect) {
        for (size_t u = 0; u < n_users; ++u) state.user_start[u] = mean;
    } else if (!cfg.fl_downlink_channel) {
        for (size_t u = 0; u < n_users; ++u) state.user_start[u] = mean;
        report.downlink_bits = static_cast<uint64_t>(n_params) * 32;  // one broadcast
    } else {
        QuantizedBlock block = quantize(mean, cfg.quant_bits);
        BitStream stream = pack_bits(block);
        for (size_t u = 0; u < n_users; ++u) {
            RngStream chan_rng(cfg.seed, "fl.chan.down", u, static_cast<uint64_t>(state.cycle));
            TransmitResult tr = transmit(stream, cfg.channel, chan_rng);
            report.downlink_bits += tr.body_bits;
            QuantizedBlock rx = unpack_bits(tr.received, cfg.quant_bits, n_params);
            state.user_start[u] = dequantize(rx);
        }
    }

    report.compute_energy_j = compute_energy_proxy(
        static_cast<double>(samples_trained) * train_flops_per_sample_full(cfg.dims),
        cfg.joules_per_flop);
    report.co2_g = co2_proxy(report.compute_energy_j, cfg.co2_g_per_joule);
    report.wall_time_s = timer.seconds();
    ++state.cycle;
    return report;
}

inline std::vector<RoundReport> fl_train(const std::vector<std::vector<EncodedSample>>& shards,
                                         const std::vector<EncodedSample>& test,
                                         const RunConfig& cfg, FlState* out_state = nullptr) {
    FlState state = make_fl_state(cfg, shards.size());
    std::vector<RoundReport> reports;
    reports.reserve(static_cast<size_t>(cfg.cycles));
    for (int k = 0; k < cfg.cycles; ++k) {
        RoundReport r = fl_round(state, shards, cfg);
        r.accuracy = evaluate(state.global, test);
        reports.push_back(r);
    }
    if (out_state) *out_state = std::move(state);
    return reports;
}

// ---------------------------------------------------------------------------
// Centralized learning: users ship raw encoded samples once, the server
// trains on whatever arrived.
// ---------------------------------------------------------------------------

inline std::vector<RoundReport> cl_train(const std::vector<std::vector<EncodedSample>>& shards,
                                         const std::vector<EncodedSample>& test,
                                         const RunConfig& cfg,
                                         SentimentModel* out_model = nullptr) {
    const size_t n_users = shards.size();
    std::vector<std::vector<EncodedSample>> received(n_users);
    std::vector<uint64_t> up_bits(n_users, 0);
    std::vector<double> up_energy(n_users, 0.0);

    detail::for_each_user(n_users, cfg.parallel_users, [&](size_t u) {
        received[u].reserve(shards[u].size());
        if (cfg.transport == Transport::Perfect) {
            received[u] = shards[u];
            return;
        }
        RngStream chan_rng(cfg.seed, "cl.chan", u);
        for (const EncodedSample& s : shards[u]) {
            BitStream payload = pack_token_payload(s.ids, s.label);
            TransmitResult tr = transmit(payload, cfg.channel, chan_rng);
            up_bits[u] += tr.body_bits;
            up_energy[u] += comm_energy(tr.body_bits, cfg.channel, tr.fading);
            TokenPayload decoded =
                unpack_token_payload(tr.received, s.ids.size(), static_cast<int32_t>(cfg.dims.vocab_words));
            received[u].push_back(EncodedSample{std::move(decoded.ids), decoded.label});
        }
    });

    std::vector<EncodedSample> train_set;
    for (auto& r : received)
        for (auto& s : r) train_set.push_back(std::move(s));

    SentimentModel model = build_model(cfg.seed, cfg.dims);
    OptimizerState opt(model.params(), cfg.lr, cfg.momentum);
    std::vector<RoundReport> reports;
    reports.reserve(static_cast<size_t>(cfg.cycles));
    for (int k = 0; k < cfg.cycles; ++k) {
        detail::Timer timer;
        opt.learning_rate = lr_schedule(cfg.lr, k);
        RngStream shuffle_rng(cfg.seed, "cl.shuffle", static_cast<uint64_t>(k));
        RoundReport r;
        r.cycle = k + 1;
        r.train_loss = train_one_epoch(model, train_set, cfg.batch_size, opt, shuffle_rng);
        r.accuracy = evaluate(model, test);
        if (k == 0) {
            for (size_t u = 0; u < n_users; ++u) {
                r.uplink_bits += up_bits[u];
                r.comm_energy_j += up_energy[u];
            }
        }
        // user-side compute is zero: the server does all the training
        r.compute_energy_j = 0.0;
        r.co2_g = 0.0;
        r.wall_time_s = timer.seconds();
        reports.push_back(r);
    }
    if (out_model) *out_model = std::move(model);
    return reports;
}

// ---------------------------------------------------------------------------
// Split learning
// ---------------------------------------------------------------------------

struct SlState {
    SplitModel split;
    OptimizerState user_opt;
    OptimizerState server_opt;
    int cycle = 0;
};

inline SlState make_sl_state(const RunConfig& cfg) {
    SlState st;
    st.split = SplitModel(build_model(cfg.seed, cfg.dims), build_codec(cfg.seed, cfg.dims));
    st.user_opt = OptimizerState(st.split.user_params(), cfg.lr, cfg.momentum);
    st.server_opt = OptimizerState(st.split.server_params(), cfg.lr, cfg.momentum);
    return st;
}

/// One split-learning cycle over a per-cycle sample budget. Per batch:
/// compressed activations go up over one fading block, the clipped
/// activation gradient comes back over a fresh block, and both sides step.
inline RoundReport sl_cycle(SlState& st, const std::vector<EncodedSample>& shard,
                            const RunConfig& cfg) {
    detail::Timer timer;
    if (shard.empty()) throw std::invalid_argument("sl_cycle: empty shard");
    const int width = cfg.dims.compressed_width();
    size_t budget = static_cast<size_t>(
        std::llround(cfg.sl_cycle_fraction * static_cast<double>(shard.size())));
    budget = std::clamp<size_t>(budget, 1, shard.size());

    std::vector<size_t> order(shard.size());
    std::iota(order.begin(), order.end(), size_t{0});
    RngStream shuffle_rng(cfg.seed, "sl.shuffle", static_cast<uint64_t>(st.cycle));
    shuffle_rng.shuffle(order);
    order.resize(budget);

    double lr = lr_schedule(cfg.lr, st.cycle);
    st.user_opt.learning_rate = lr;
    st.server_opt.learning_rate = lr;

    RoundReport report;
    report.cycle = st.cycle + 1;
    double loss_sum = 0.0;

    std::vector<SplitModel::UserCache> user_caches(cfg.batch_size);
    SplitModel::ServerCache server_cache;
    auto user_params = st.split.user_params();
    auto user_grads = st.split.user_grads();
    auto server_params = st.split.server_params();
    auto server_grads = st.split.server_grads();

    uint64_t batch_index = 0;
    for (size_t start = 0; start < budget; start += cfg.batch_size, ++batch_index) {
        const size_t bs = std::min(cfg.batch_size, budget - start);
        Tensor acts({static_cast<int>(bs), width});
        for (size_t i = 0; i < bs; ++i) {
            const EncodedSample& s = shard[order[start + i]];
            Tensor a = st.split.user_forward(s.ids, user_caches[i]);
            std::copy(a.data.begin(), a.data.end(), acts.data.begin() + i * width);
        }

        Tensor received_acts;
        if (cfg.transport == Transport::Perfect) {
            received_acts = acts;
        } else {
            QuantizedBlock block = quantize(acts, cfg.sl_transport_bits);
            BitStream stream = pack_bits(block);
            RngStream up_rng(cfg.seed, "sl.chan.up", static_cast<uint64_t>(st.cycle), batch_index);
            TransmitResult tr = transmit(stream, cfg.channel, up_rng);
            report.uplink_bits += tr.body_bits;
            report.comm_energy_j += comm_energy(tr.body_bits, cfg.channel, tr.fading);
            received_acts = dequantize(unpack_bits(tr.received, cfg.sl_transport_bits, acts.size()));
        }

        // server pass: gradients are means over the batch, so the feedback
        // rows already carry the 1/bs factor
        st.split.zero_grads();
        Tensor act_grads({static_cast<int>(bs), width});
        const float inv_bs = 1.0f / static_cast<float>(bs);
        for (size_t i = 0; i < bs; ++i) {
            Tensor row({width});
            std::copy(received_acts.data.begin() + i * width,
                      received_acts.data.begin() + (i + 1) * width, row.data.begin());
            float p = st.split.server_forward(row, server_cache);
            const EncodedSample& s = shard[order[start + i]];
            BceResult r = bce_loss(p, s.label);
            loss_sum += r.loss;
            Tensor ds = st.split.server_backward(static_cast<float>(r.dloss_dpred) * inv_bs,
                                                 server_cache);
            std::copy(ds.data.begin(), ds.data.end(), act_grads.data.begin() + i * width);
        }
        st.split.net.apply_fc1_l2();
        clip_by_global_norm(server_grads, cfg.clip_tau);
        bool server_finite = true;
        for (const Tensor* g : server_grads)
            if (!g->all_finite()) server_finite = false;
        if (server_finite) sgd_momentum_step(server_params, server_grads, st.server_opt);

        // feedback: clip, then a fresh fading block for the reverse direction
        clip_by_global_norm(act_grads, cfg.clip_tau);
        Tensor received_grads;
        if (cfg.transport == Transport::Perfect) {
            received_grads = act_grads;
        } else {
            QuantizedBlock block = quantize(act_grads, cfg.sl_transport_bits);
            BitStream stream = pack_bits(block);
            RngStream down_rng(cfg.seed, "sl.chan.down", static_cast<uint64_t>(st.cycle), batch_index);
            TransmitResult tr = transmit(stream, cfg.channel, down_rng);
            report.downlink_bits += tr.body_bits;  // server-side transmitter; not priced
            received_grads =
                dequantize(unpack_bits(tr.received, cfg.sl_transport_bits, act_grads.size()));
        }

        for (size_t i = 0; i < bs; ++i) {
            Tensor row({width});
            std::copy(received_grads.data.begin() + i * width,
                      received_grads.data.begin() + (i + 1) * width, row.data.begin());
            st.split.user_backward(row, user_caches[i]);
        }
        clip_by_global_norm(user_grads, cfg.clip_tau);
        bool user_finite = true;
        for (const Tensor* g : user_grads)
            if (!g->all_finite()) user_finite = false;
        if (user_finite) sgd_momentum_step(user_params, user_grads, st.user_opt);
    }

    report.train_loss = loss_sum / static_cast<double>(budget);
    report.compute_energy_j = compute_energy_proxy(
        static_cast<double>(budget) * train_flops_per_sample_split_user(cfg.dims),
        cfg.joules_per_flop);
    report.co2_g = co2_proxy(report.compute_energy_j, cfg.co2_g_per_joule);
    report.wall_time_s = timer.seconds();
    ++st.cycle;
    return report;
}

inline std::vector<RoundReport> sl_train(const std::vector<EncodedSample>& shard,
                                         const std::vector<EncodedSample>& test,
                                         const RunConfig& cfg, SlState* out_state = nullptr) {
    SlState state = make_sl_state(cfg);
    std::vector<RoundReport> reports;
    reports.reserve(static_cast<size_t>(cfg.cycles));
    for (int k = 0; k < cfg.cycles; ++k) {
        RoundReport r = sl_cycle(state, shard, cfg);
        r.accuracy = evaluate_split(state.split, test);
        reports.push_back(r);
    }
    if (out_state) *out_state = std::move(state);
    return reports;
}

}  // namespace wirelearn
