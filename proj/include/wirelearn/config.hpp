#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wirelearn/channel.hpp"
#include "wirelearn/privacy.hpp"
#include "wirelearn/protocols.hpp"

namespace wirelearn {

/// User-facing experiment settings. Defaults follow the reference setup:
/// batch 512, momentum 0.9, lr 0.01, clip 0.5, 100 kHz bandwidth, 1 mW,
/// sequence length 30, vocabulary 10,000, 90/10 split.
struct ExperimentConfig {
    std::string scheme = "fl";
    int users = 0;   // 0 = per-scheme default (fl/cl: 3, sl: 1)
    int cycles = 0;  // 0 = per-scheme default (fl: 7, cl/sl: 50)
    int local_epochs = 5;
    int quant_bits = 8;
    double snr_db = 20.0;
    std::string fading = "rayleigh";
    double fading_norm = 1.0;
    int batch_size = 512;
    double lr = 0.01;
    double momentum = 0.9;
    double clip_tau = 0.5;
    double l2 = 1e-4;
    double bandwidth_hz = 100e3;
    double power_w = 1e-3;
    int seq_len = 30;
    int vocab_size = 10000;
    double test_fraction = 0.10;
    std::string dataset;  // CSV path; empty with format=synthetic generates data
    std::string dataset_format = "synthetic";  // sentiment140 | simple | synthetic
    uint64_t synthetic_samples = 20000;
    uint64_t max_records = 0;  // 0 = keep everything
    uint64_t seed = 42;
    std::string out = "metrics.csv";
    double sl_cycle_fraction = 0.04;
    int sl_transport_bits = 16;
    std::string transport = "channel";    // channel | perfect
    std::string fl_downlink = "perfect";  // perfect | channel
    bool parallel_users = false;
    bool privacy = true;
    bool privacy_over_channel = false;
    uint64_t privacy_pairs = 600;
    int privacy_epochs = 60;
    double joules_per_flop = 1e-9;
    double co2_g_per_joule = 7.7e-5;
    std::string sweep;  // e.g. "snr_db=0,5,10,15,20"

    int resolved_users() const {
        if (users > 0) return users;
        return scheme == "sl" ? 1 : 3;
    }
    int resolved_cycles() const {
        if (cycles > 0) return cycles;
        return scheme == "fl" ? 7 : 50;
    }

    RunConfig to_run_config() const {
        RunConfig rc;
        rc.seed = seed;
        rc.dims.vocab_words = vocab_size;
        rc.dims.seq_len = seq_len;
        rc.channel.snr_db = snr_db;
        rc.channel.bandwidth_hz = bandwidth_hz;
        rc.channel.power_w = power_w;
        rc.channel.fading = fading == "rayleigh" ? Fading::Rayleigh : Fading::None;
        rc.channel.fading_norm = fading_norm;
        rc.transport = transport == "perfect" ? Transport::Perfect : Transport::Channel;
        rc.quant_bits = quant_bits;
        rc.cycles = resolved_cycles();
        rc.local_epochs = local_epochs;
        rc.batch_size = static_cast<size_t>(batch_size);
        rc.lr = lr;
        rc.momentum = momentum;
        rc.clip_tau = clip_tau;
        rc.sl_cycle_fraction = sl_cycle_fraction;
        rc.sl_transport_bits = sl_transport_bits;
        rc.fl_downlink_channel = fl_downlink == "channel";
        rc.parallel_users = parallel_users;
        rc.joules_per_flop = joules_per_flop;
        rc.co2_g_per_joule = co2_g_per_joule;
        return rc;
    }

    PrivacyConfig to_privacy_config() const {
        PrivacyConfig pc;
        pc.pairs_per_user = privacy_pairs;
        pc.epochs = privacy_epochs;
        pc.batch_size = static_cast<size_t>(batch_size);
        pc.over_channel = privacy_over_channel;
        return pc;
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Canonical key=value view of a config, also the on-disk config-file and
/// metrics-header format. Parsing this back reproduces the config exactly.
inline std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
    using detail::fmt_double;
    return {
        {"scheme", c.scheme},
        {"users", std::to_string(c.users)},
        {"cycles", std::to_string(c.cycles)},
        {"local_epochs", std::to_string(c.local_epochs)},
        {"quant_bits", std::to_string(c.quant_bits)},
        {"snr_db", fmt_double(c.snr_db)},
        {"fading", c.fading},
        {"fading_norm", fmt_double(c.fading_norm)},
        {"batch_size", std::to_string(c.batch_size)},
        {"lr", fmt_double(c.lr)},
        {"momentum", fmt_double(c.momentum)},
        {"clip_tau", fmt_double(c.clip_tau)},
        {"l2", fmt_double(c.l2)},
        {"bandwidth_hz", fmt_double(c.bandwidth_hz)},
        {"power_w", fmt_double(c.power_w)},
        {"seq_len", std::to_string(c.seq_len)},
        {"vocab_size", std::to_string(c.vocab_size)},
        {"test_fraction", fmt_double(c.test_fraction)},
        {"dataset", c.dataset},
        {"dataset_format", c.dataset_format},
        {"synthetic_samples", std::to_string(c.synthetic_samples)},
        {"max_records", std::to_string(c.max_records)},
        {"seed", std::to_string(c.seed)},
        {"out", c.out},
        {"sl_cycle_fraction", fmt_double(c.sl_cycle_fraction)},
        {"sl_transport_bits", std::to_string(c.sl_transport_bits)},
        {"transport", c.transport},
        {"fl_downlink", c.fl_downlink},
        {"parallel_users", c.parallel_users ? "true" : "false"},
        {"privacy", c.privacy ? "true" : "false"},
        {"privacy_over_channel", c.privacy_over_channel ? "true" : "false"},
        {"privacy_pairs", std::to_string(c.privacy_pairs)},
        {"privacy_epochs", std::to_string(c.privacy_epochs)},
        {"joules_per_flop", fmt_double(c.joules_per_flop)},
        {"co2_g_per_joule", fmt_double(c.co2_g_per_joule)},
    };
}

/// Registers every config key on a CLI11 app. Key names double as config-file
/// keys; flags override file values, and WIRELEARN_<KEY> env vars sit between
/// the two.
inline void add_config_options(CLI::App& app, ExperimentConfig& c) {
    // dashed flag plus an underscored alias, so config-file keys read
    // snr_db=10 while the command line stays --snr-db
    auto opt = [&](const std::string& flag, auto& field, const std::string& help) {
        std::string underscored = flag;
        for (char& ch : underscored)
            if (ch == '-') ch = '_';
        std::string names = "--" + flag;
        if (underscored != flag) names += ",--" + underscored;
        std::string env = "WIRELEARN_";
        for (char ch : underscored) env += static_cast<char>(std::toupper(ch));
        return app.add_option(names, field, help)->envname(env);
    };
    opt("scheme", c.scheme, "learning scheme")->check(CLI::IsMember({"cl", "fl", "sl"}));
    opt("users", c.users, "number of users (0 = scheme default)")->check(CLI::Range(0, 1024));
    opt("cycles", c.cycles, "communication cycles (0 = scheme default)")
        ->check(CLI::Range(0, 1000000));
    opt("local-epochs", c.local_epochs, "FL local epochs per cycle")->check(CLI::Range(1, 10000));
    opt("quant-bits", c.quant_bits, "uplink quantization width")
        ->check(CLI::IsMember({4, 8, 16, 32}));
    opt("snr-db", c.snr_db, "channel SNR in dB (inf disables noise)");
    opt("fading", c.fading, "fading model")->check(CLI::IsMember({"none", "rayleigh"}));
    opt("fading-norm", c.fading_norm, "E[f^2] of the fading draw")
        ->check(CLI::IsMember(std::vector<double>{1.0, 2.0}));
    opt("batch-size", c.batch_size, "minibatch size")->check(CLI::Range(1, 1 << 20));
    opt("lr", c.lr, "initial learning rate")->check(CLI::PositiveNumber);
    opt("momentum", c.momentum, "SGD momentum")->check(CLI::Range(0.0, 0.9999));
    opt("clip-tau", c.clip_tau, "gradient clipping threshold (SL)");
    opt("l2", c.l2, "weight decay on the 16-unit dense layer");
    opt("bandwidth-hz", c.bandwidth_hz, "channel bandwidth")->check(CLI::PositiveNumber);
    opt("power-w", c.power_w, "transmit power")->check(CLI::PositiveNumber);
    opt("seq-len", c.seq_len, "token sequence length")->check(CLI::Range(4, 4096));
    opt("vocab-size", c.vocab_size, "vocabulary size (most frequent words)")
        ->check(CLI::Range(1, 10000000));
    opt("test-fraction", c.test_fraction, "held-out test share")->check(CLI::Range(0.01, 0.5));
    opt("dataset", c.dataset, "corpus CSV path");
    opt("dataset-format", c.dataset_format, "corpus layout")
        ->check(CLI::IsMember({"sentiment140", "simple", "synthetic"}));
    opt("synthetic-samples", c.synthetic_samples, "synthetic corpus size");
    opt("max-records", c.max_records, "seeded uniform subsample cap (0 = all)");
    opt("seed", c.seed, "master seed");
    opt("out", c.out, "metrics CSV path");
    opt("sl-cycle-fraction", c.sl_cycle_fraction, "SL per-cycle share of the shard")
        ->check(CLI::Range(1e-6, 1.0));
    opt("sl-transport-bits", c.sl_transport_bits, "SL activation/gradient width")
        ->check(CLI::IsMember({4, 8, 16, 32}));
    opt("transport", c.transport, "payload transport")
        ->check(CLI::IsMember({"channel", "perfect"}));
    opt("fl-downlink", c.fl_downlink, "FL broadcast impairment")
        ->check(CLI::IsMember({"perfect", "channel"}));
    opt("parallel-users", c.parallel_users, "train users on threads");
    opt("privacy", c.privacy, "run the reconstruction adversary");
    opt("privacy-over-channel", c.privacy_over_channel, "corrupt CL observables");
    opt("privacy-pairs", c.privacy_pairs, "pairs per user for the adversary");
    opt("privacy-epochs", c.privacy_epochs, "adversary training epochs")
        ->check(CLI::Range(1, 100000));
    opt("joules-per-flop", c.joules_per_flop, "compute energy proxy constant");
    opt("co2-g-per-joule", c.co2_g_per_joule, "carbon intensity constant");
    app.add_option("--sweep", c.sweep, "key=v1,v2,... runs one experiment per value");
}

struct ParseOutcome {
    ExperimentConfig config;
    bool ok = false;
    int exit_code = 0;
    std::string message;
};

/// Parses simulate-style arguments (no program name). A --config FILE holds
/// key=value lines; unknown keys are rejected.
inline ParseOutcome parse_config(const std::vector<std::string>& args) {
    ParseOutcome out;
    CLI::App app{"wirelearn simulate"};
    add_config_options(app, out.config);
    app.set_config("--config", "", "key=value config file");
    app.allow_config_extras(false);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
        out.ok = true;
    } catch (const CLI::ParseError& e) {
        out.exit_code = e.get_exit_code();
        out.message = e.what();
        out.ok = out.exit_code == 0;  // --help lands here
    }
    return out;
}

/// Overrides one field by its config-file key; used by sweep mode.
inline void apply_override(ExperimentConfig& c, const std::string& key, const std::string& value) {
    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    if (key == "snr_db") c.snr_db = as_double();
    else if (key == "quant_bits") c.quant_bits = as_int();
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "cycles") c.cycles = as_int();
    else if (key == "users") c.users = as_int();
    else if (key == "local_epochs") c.local_epochs = as_int();
    else if (key == "lr") c.lr = as_double();
    else if (key == "sl_cycle_fraction") c.sl_cycle_fraction = as_double();
    else if (key == "fading") c.fading = value;
    else throw std::invalid_argument("sweep: unsupported key '" + key + "'");
}

}  // namespace wirelearn
