#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wirelearn/config.hpp"
#include "wirelearn/data.hpp"
#include "wirelearn/metrics.hpp"
#include "wirelearn/privacy.hpp"
#include "wirelearn/protocols.hpp"

namespace wirelearn {

struct PreparedData {
    Vocab vocab;
    DataSplit split;
};

/// Corpus -> vocabulary -> encoded samples -> per-user shards + shared test
/// set, all driven by the master seed.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    Corpus corpus;
    if (cfg.dataset_format == "synthetic") {
        corpus = synthetic_corpus(cfg.synthetic_samples, cfg.seed);
        if (cfg.max_records > 0 && corpus.records.size() > cfg.max_records)
            corpus.records.resize(cfg.max_records);
    } else {
        CorpusFormat fmt = cfg.dataset_format == "simple" ? CorpusFormat::Simple
                                                          : CorpusFormat::Sentiment140;
        corpus = load_corpus(cfg.dataset, cfg.max_records, fmt, cfg.seed);
    }
    PreparedData out;
    out.vocab = build_vocab(corpus, static_cast<size_t>(cfg.vocab_size));
    std::vector<EncodedSample> samples;
    samples.reserve(corpus.records.size());
    for (const auto& [label, text] : corpus.records)
        samples.push_back(
            EncodedSample{encode(text, out.vocab, static_cast<size_t>(cfg.seq_len)), label});
    out.split = split_and_shard(samples, cfg.test_fraction,
                                static_cast<size_t>(cfg.resolved_users()), cfg.seed);
    return out;
}

struct RunResult {
    std::vector<RoundReport> reports;
    double recon_error = std::nan("");
};

/// Executes one experiment and returns its per-cycle reports plus the
/// privacy measurement (NaN when disabled).
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    RunConfig rc = cfg.to_run_config();
    PreparedData data = prepare_data(cfg);
    RunResult result;
    PrivacyConfig pcfg = cfg.to_privacy_config();

    if (cfg.scheme == "fl") {
        FlState state;
        result.reports = fl_train(data.split.shards, data.split.test, rc, &state);
        if (cfg.privacy)
            result.recon_error =
                run_privacy_eval(Scheme::Fl, data.split.shards, rc, pcfg, &state.global).mean;
    } else if (cfg.scheme == "cl") {
        SentimentModel model;
        result.reports = cl_train(data.split.shards, data.split.test, rc, &model);
        if (cfg.privacy)
            result.recon_error =
                run_privacy_eval(Scheme::Cl, data.split.shards, rc, pcfg).mean;
    } else if (cfg.scheme == "sl") {
        if (data.split.shards.size() != 1)
            throw std::invalid_argument("split learning runs with a single user");
        SlState state;
        result.reports = sl_train(data.split.shards[0], data.split.test, rc, &state);
        if (cfg.privacy)
            result.recon_error = run_privacy_eval(Scheme::Sl, data.split.shards, rc, pcfg,
                                                  nullptr, &state.split)
                                     .mean;
    } else {
        throw std::invalid_argument("unknown scheme '" + cfg.scheme + "'");
    }
    return result;
}

/// Runs the experiment and persists the metrics file. Returns a process
/// exit code.
inline int run_and_write(const ExperimentConfig& cfg) {
    RunResult result = run_experiment(cfg);
    write_metrics_file(cfg.out, cfg, result.reports, result.recon_error);
    return 0;
}

/// Derived per-point output path for sweep mode: metrics.csv ->
/// metrics_snr_db_10.csv.
inline std::string sweep_out_path(const std::string& out, const std::string& key,
                                  const std::string& value) {
    std::string stem = out, ext;
    size_t dot = out.rfind('.');
    size_t slash = out.find_last_of("/\\");
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        stem = out.substr(0, dot);
        ext = out.substr(dot);
    }
    return stem + "_" + key + "_" + value + ext;
}

/// `--sweep key=v1,v2,...`: one experiment and one metrics file per value.
inline int run_sweep(const ExperimentConfig& base) {
    size_t eq = base.sweep.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= base.sweep.size())
        throw std::invalid_argument("sweep: expected key=v1,v2,...");
    std::string key = base.sweep.substr(0, eq);
    std::string values = base.sweep.substr(eq + 1);
    std::vector<std::string> tokens;
    size_t pos = 0;
    while (pos <= values.size()) {
        size_t comma = values.find(',', pos);
        if (comma == std::string::npos) comma = values.size();
        if (comma > pos) tokens.push_back(values.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (tokens.empty()) throw std::invalid_argument("sweep: no values");
    for (const std::string& token : tokens) {
        ExperimentConfig point = base;
        point.sweep.clear();
        apply_override(point, key, token);
        point.out = sweep_out_path(base.out, key, token);
        int rc = run_and_write(point);
        if (rc != 0) return rc;
    }
    return 0;
}

}  // namespace wirelearn
