#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "wirelearn/channel.hpp"
#include "wirelearn/model.hpp"

namespace wirelearn {

/// Shannon capacity of the faded link, bits/s.
inline double channel_capacity(const ChannelConfig& cfg, double fading) {
    if (cfg.bandwidth_hz <= 0.0) throw std::invalid_argument("channel_capacity: bandwidth");
    if (fading < 0.0) throw std::invalid_argument("channel_capacity: negative fading");
    if (fading == 0.0) return 0.0;
    return cfg.bandwidth_hz * std::log2(1.0 + fading * fading * cfg.snr_linear());
}

inline double energy_per_bit(const ChannelConfig& cfg, double fading) {
    double c = channel_capacity(cfg, fading);
    if (c <= 0.0) throw std::runtime_error("energy_per_bit: zero channel capacity");
    return cfg.power_w / c;
}

/// (P / C) * payload_bits, priced at the fading draw of the block that
/// carried the payload.
inline double comm_energy(uint64_t payload_bits, const ChannelConfig& cfg, double fading) {
    if (payload_bits == 0) return 0.0;
    return energy_per_bit(cfg, fading) * static_cast<double>(payload_bits);
}

inline double compute_energy_proxy(double flops, double joules_per_flop) {
    if (flops < 0.0 || joules_per_flop < 0.0)
        throw std::invalid_argument("compute_energy_proxy: negative input");
    return flops * joules_per_flop;
}

inline double co2_proxy(double energy_j, double grams_per_joule) {
    if (energy_j < 0.0 || grams_per_joule < 0.0)
        throw std::invalid_argument("co2_proxy: negative input");
    return energy_j * grams_per_joule;
}

// ---------------------------------------------------------------------------
// Analytic FLOP counts (multiply and add counted separately). Embedding
// lookups are copies and count as zero. Backward is taken as twice forward,
// the usual estimate for dense compute.
// ---------------------------------------------------------------------------

inline double dense_forward_flops(int in, int out) { return 2.0 * in * out + out; }

inline double conv1d_forward_flops(const ModelDims& d) {
    return static_cast<double>(d.conv_out_len()) * d.filters * (2.0 * d.kernel * d.embed + 1.0);
}

inline double maxpool_forward_flops(const ModelDims& d) {
    return static_cast<double>(d.pool_out_len()) * d.filters;
}

inline double lstm_forward_flops(const ModelDims& d) {
    double per_step = 4.0 * (2.0 * d.filters * d.lstm_units + 2.0 * d.lstm_units * d.lstm_units +
                             d.lstm_units) +
                      10.0 * d.lstm_units;  // gate matvecs plus elementwise cell update
    return static_cast<double>(d.pool_out_len()) * per_step;
}

/// Full-stack forward cost per sample (FL/CL user training and evaluation).
inline double model_forward_flops(const ModelDims& d) {
    return conv1d_forward_flops(d) + maxpool_forward_flops(d) + lstm_forward_flops(d) +
           dense_forward_flops(d.lstm_units, d.fc1_units) + dense_forward_flops(d.fc1_units, 1);
}

/// User-side forward cost per sample under the split: embedding, conv,
/// pool and the compression encoder.
inline double split_user_forward_flops(const ModelDims& d) {
    return conv1d_forward_flops(d) + maxpool_forward_flops(d) +
           dense_forward_flops(d.cut_width(), d.compressed_width());
}

inline double train_flops_per_sample_full(const ModelDims& d) {
    return 3.0 * model_forward_flops(d);
}

inline double train_flops_per_sample_split_user(const ModelDims& d) {
    return 3.0 * split_user_forward_flops(d);
}

// ---------------------------------------------------------------------------
// Payload accounting. These mirror exactly what the protocols push through
// the channel (scale headers ride as exempt side information and are not
// counted or priced).
// ---------------------------------------------------------------------------

inline uint64_t fl_uplink_bits_per_user_cycle(uint64_t n_params, int quant_bits) {
    return n_params * static_cast<uint64_t>(quant_bits);
}

inline uint64_t sl_uplink_bits(uint64_t samples_per_cycle, uint64_t cycles,
                               const ModelDims& d, int transport_bits = 16) {
    return samples_per_cycle * cycles * static_cast<uint64_t>(d.compressed_width()) *
           static_cast<uint64_t>(transport_bits);
}

inline uint64_t cl_bits_per_sample(const ModelDims& d) {
    return static_cast<uint64_t>(d.seq_len) * 16 + 2;
}

inline uint64_t cl_uplink_bits_per_user(uint64_t samples, const ModelDims& d) {
    return samples * cl_bits_per_sample(d);
}

}  // namespace wirelearn
