// Command-line front end: `simulate` runs one experiment (or a sweep) and
// writes a metrics CSV, `compare` tabulates metrics files, `ber` probes the
// channel against its configuration.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wirelearn/channel.hpp"
#include "wirelearn/config.hpp"
#include "wirelearn/metrics.hpp"
#include "wirelearn/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"decentralized sentiment training over a simulated wireless link"};
    app.require_subcommand(1);

    wirelearn::ExperimentConfig cfg;
    CLI::App* simulate = app.add_subcommand("simulate", "run one experiment");
    wirelearn::add_config_options(*simulate, cfg);
    simulate->set_config("--config", "", "key=value config file");
    simulate->allow_config_extras(false);

    std::vector<std::string> compare_files;
    CLI::App* compare = app.add_subcommand("compare", "tabulate metrics files");
    compare->add_option("files", compare_files, "metrics CSV files")
        ->required()
        ->check(CLI::ExistingFile);

    double ber_snr_db = 10.0;
    uint64_t ber_bits = 1000000;
    uint64_t ber_block = 128;
    std::string ber_fading = "none";
    uint64_t ber_seed = 1;
    CLI::App* ber = app.add_subcommand("ber", "empirical bit error rate");
    ber->add_option("--snr-db", ber_snr_db, "SNR in dB");
    ber->add_option("--bits", ber_bits, "number of bits")->check(CLI::Range(uint64_t(1), uint64_t(1) << 40));
    ber->add_option("--block-bits", ber_block, "bits per fading block");
    ber->add_option("--fading", ber_fading, "fading model")
        ->check(CLI::IsMember({"none", "rayleigh"}));
    ber->add_option("--seed", ber_seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            if (!cfg.sweep.empty()) return wirelearn::run_sweep(cfg);
            return wirelearn::run_and_write(cfg);
        }
        if (compare->parsed()) {
            std::fputs(wirelearn::compare_table(compare_files).c_str(), stdout);
            return 0;
        }
        if (ber->parsed()) {
            wirelearn::ChannelConfig ch;
            ch.snr_db = ber_snr_db;
            ch.fading = ber_fading == "rayleigh" ? wirelearn::Fading::Rayleigh
                                                 : wirelearn::Fading::None;
            wirelearn::RngStream rng(ber_seed, "ber.cli");
            double ber_est = wirelearn::estimate_ber(ch, ber_bits, rng, ber_block);
            std::printf("snr_db=%g fading=%s bits=%llu ber=%.6g\n", ber_snr_db,
                        ber_fading.c_str(), static_cast<unsigned long long>(ber_bits), ber_est);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
