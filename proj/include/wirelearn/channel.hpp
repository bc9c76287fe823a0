#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wirelearn/bitstream.hpp"
#include "wirelearn/rng.hpp"

namespace wirelearn {

enum class Fading { None, Rayleigh };

/// Physical link parameters. snr_db may be +infinity, which disables noise.
struct ChannelConfig {
    double snr_db = 20.0;
    double bandwidth_hz = 100e3;
    double power_w = 1e-3;
    Fading fading = Fading::Rayleigh;
    double fading_norm = 1.0;  // E[f^2]; 2.0 selects the unit-variance-component variant

    double snr_linear() const { return std::pow(10.0, snr_db / 10.0); }
    bool noiseless() const { return std::isinf(snr_db) && snr_db > 0; }
};

/// One block-fading magnitude: f = sqrt(X^2 + Y^2) with X,Y ~ N(0, norm/2),
/// so E[f^2] == norm.
inline double draw_rayleigh(RngStream& rng, double norm = 1.0) {
    double sd = std::sqrt(norm / 2.0);
    double x = rng.normal(0.0, sd);
    double y = rng.normal(0.0, sd);
    return std::sqrt(x * x + y * y);
}

inline double draw_fading(const ChannelConfig& cfg, RngStream& rng) {
    return cfg.fading == Fading::Rayleigh ? draw_rayleigh(rng, cfg.fading_norm) : 1.0;
}

/// bit 1 -> +1, bit 0 -> -1 (unit symbol energy).
inline std::vector<double> modulate_bpsk(const std::vector<uint8_t>& bits) {
    std::vector<double> symbols(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) symbols[i] = bits[i] ? 1.0 : -1.0;
    return symbols;
}

/// Coherent detection with the true fading coefficient: threshold
/// received/f at zero, ties decoding to bit 1.
inline std::vector<uint8_t> demodulate_bpsk(const std::vector<double>& received, double f) {
    if (f == 0.0) throw std::invalid_argument("demodulate_bpsk: zero fading coefficient");
    std::vector<uint8_t> bits(received.size());
    for (size_t i = 0; i < received.size(); ++i)
        bits[i] = (received[i] / f >= 0.0) ? 1 : 0;
    return bits;
}

struct TransmitResult {
    BitStream received;
    double fading = 1.0;    // the block draw, reused for energy pricing
    uint64_t body_bits = 0; // payload bits pushed through the noisy channel
};

/// One call is one fading block: a single coefficient scales every symbol,
/// noise is fresh per symbol with sigma^2 = 1/(2*SNR) under unit symbol
/// energy. Header bits (the cleartext scale field) pass through unharmed.
inline TransmitResult transmit(const BitStream& payload, const ChannelConfig& cfg,
                               RngStream& rng) {
    TransmitResult result;
    result.received = payload;
    result.fading = draw_fading(cfg, rng);
    result.body_bits = payload.body_bits();
    if (result.fading == 0.0) throw std::runtime_error("transmit: zero fading draw");
    if (cfg.noiseless()) return result;
    const double sigma = std::sqrt(1.0 / (2.0 * cfg.snr_linear()));
    const double f = result.fading;
    for (size_t i = payload.header_bits; i < payload.bits.size(); ++i) {
        double symbol = payload.bits[i] ? 1.0 : -1.0;
        double y = f * symbol + sigma * rng.normal();
        result.received.bits[i] = (y >= 0.0) ? 1 : 0;
    }
    return result;
}

/// Monte Carlo bit error rate over random payload. Bits are sent in
/// fading blocks of block_bits so the estimate averages over the fading
/// distribution as well as the noise.
inline double estimate_ber(const ChannelConfig& cfg, uint64_t n_bits, RngStream& rng,
                           uint64_t block_bits = 128) {
    if (n_bits == 0) throw std::invalid_argument("estimate_ber: need bits");
    if (block_bits == 0) block_bits = n_bits;
    const double sigma = cfg.noiseless() ? 0.0 : std::sqrt(1.0 / (2.0 * cfg.snr_linear()));
    uint64_t errors = 0;
    uint64_t done = 0;
    while (done < n_bits) {
        uint64_t m = std::min(block_bits, n_bits - done);
        double f = draw_fading(cfg, rng);
        for (uint64_t i = 0; i < m; ++i) {
            // symmetric constellation: send +1 w.l.o.g.
            double y = f + sigma * rng.normal();
            if (y < 0.0) ++errors;
        }
        done += m;
    }
    return static_cast<double>(errors) / static_cast<double>(n_bits);
}

}  // namespace wirelearn
