#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wirelearn/config.hpp"
#include "wirelearn/protocols.hpp"

namespace wirelearn {

inline constexpr const char* kMetricsVersion = "wirelearn-metrics v1";
inline constexpr const char* kMetricsHeader =
    "scheme,seed,cycle,snr_db,quant_bits,accuracy,loss,uplink_bits,downlink_bits,"
    "comm_energy_j,compute_energy_j,co2_g,recon_error";

namespace detail {

inline std::string fmt_metric(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

/// Metrics file layout: a version line, the full config as commented
/// key=value lines (replayable), the column header, one row per cycle and a
/// trailing summary row whose cycle field is "total". UTF-8, LF endings.
inline std::string render_metrics(const ExperimentConfig& cfg,
                                  const std::vector<RoundReport>& reports,
                                  double recon_error /* NaN when not measured */) {
    std::ostringstream os;
    os << "# " << kMetricsVersion << "\n";
    for (const auto& [key, value] : config_items(cfg))
        os << "# cfg " << key << "=" << value << "\n";
    os << kMetricsHeader << "\n";
    auto row = [&](const std::string& cycle, double acc, double loss, uint64_t up, uint64_t down,
                   double comm, double comp, double co2, double recon) {
        os << cfg.scheme << ',' << cfg.seed << ',' << cycle << ','
           << detail::fmt_metric(cfg.snr_db) << ',' << cfg.quant_bits << ','
           << detail::fmt_metric(acc) << ',' << detail::fmt_metric(loss) << ',' << up << ','
           << down << ',' << detail::fmt_metric(comm) << ',' << detail::fmt_metric(comp) << ','
           << detail::fmt_metric(co2) << ',' << detail::fmt_metric(recon) << "\n";
    };
    const double nan = std::nan("");
    uint64_t up = 0, down = 0;
    double comm = 0, comp = 0, co2 = 0;
    for (const RoundReport& r : reports) {
        row(std::to_string(r.cycle), r.accuracy, r.train_loss, r.uplink_bits, r.downlink_bits,
            r.comm_energy_j, r.compute_energy_j, r.co2_g, nan);
        up += r.uplink_bits;
        down += r.downlink_bits;
        comm += r.comm_energy_j;
        comp += r.compute_energy_j;
        co2 += r.co2_g;
    }
    double final_acc = reports.empty() ? nan : reports.back().accuracy;
    double final_loss = reports.empty() ? nan : reports.back().train_loss;
    row("total", final_acc, final_loss, up, down, comm, comp, co2, recon_error);
    return os.str();
}

inline void write_metrics_file(const std::string& path, const ExperimentConfig& cfg,
                               const std::vector<RoundReport>& reports, double recon_error) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open metrics file " + path);
    os << render_metrics(cfg, reports, recon_error);
    if (!os) throw std::runtime_error("failed writing metrics file " + path);
}

// ---------------------------------------------------------------------------
// Reading side: used by `compare` and by replay tests.
// ---------------------------------------------------------------------------

struct MetricsFile {
    std::string version;
    std::vector<std::pair<std::string, std::string>> config;  // embedded key=value lines
    std::vector<std::string> columns;
    struct Row {
        std::string scheme;
        std::string cycle;  // number or "total"
        std::vector<std::string> raw;
    };
    std::vector<Row> cycle_rows;
    Row summary;
    bool has_summary = false;

    int column(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw std::runtime_error("metrics file missing column '" + name + "'");
    }
    static double as_double(const std::string& s) { return std::stod(s); }
    static uint64_t as_u64(const std::string& s) { return std::stoull(s); }
};

inline MetricsFile read_metrics_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open metrics file " + path);
    MetricsFile mf;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# cfg ", 0) == 0) {
            std::string kv = line.substr(6);
            size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("bad config line in " + path);
            mf.config.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            continue;
        }
        if (line.rfind("# ", 0) == 0) {
            if (mf.version.empty()) mf.version = line.substr(2);
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!header_seen) {
            mf.columns = fields;
            header_seen = true;
            continue;
        }
        MetricsFile::Row row;
        row.raw = fields;
        if (fields.size() != mf.columns.size())
            throw std::runtime_error("ragged row in " + path);
        row.scheme = fields[static_cast<size_t>(mf.column("scheme"))];
        row.cycle = fields[static_cast<size_t>(mf.column("cycle"))];
        if (row.cycle == "total") {
            mf.summary = row;
            mf.has_summary = true;
        } else {
            mf.cycle_rows.push_back(row);
        }
    }
    if (!header_seen) throw std::runtime_error("no header in " + path);
    return mf;
}

/// Rebuilds simulate arguments from the embedded config of a metrics file.
inline std::vector<std::string> replay_args(const MetricsFile& mf) {
    std::vector<std::string> args;
    for (const auto& [key, value] : mf.config) {
        if (value.empty()) continue;
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

/// Totals table across metrics files, one line per input. Totals are column
/// sums over cycle rows; accuracy is the final cycle; the reconstruction
/// error comes from the summary row.
inline std::string compare_table(const std::vector<std::string>& paths) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-8s %14s %10s %12s %14s %14s %14s\n", "scheme",
                  "total_bits", "accuracy", "recon_error", "comp_energy_J", "comm_energy_J",
                  "total_energy_J");
    os << buf;
    for (const std::string& path : paths) {
        MetricsFile mf = read_metrics_file(path);
        int c_up = mf.column("uplink_bits");
        int c_acc = mf.column("accuracy");
        int c_comm = mf.column("comm_energy_j");
        int c_comp = mf.column("compute_energy_j");
        int c_recon = mf.column("recon_error");
        uint64_t bits = 0;
        double comm = 0, comp = 0;
        double acc = std::nan("");
        for (const auto& row : mf.cycle_rows) {
            bits += MetricsFile::as_u64(row.raw[static_cast<size_t>(c_up)]);
            comm += MetricsFile::as_double(row.raw[static_cast<size_t>(c_comm)]);
            comp += MetricsFile::as_double(row.raw[static_cast<size_t>(c_comp)]);
            acc = MetricsFile::as_double(row.raw[static_cast<size_t>(c_acc)]);
        }
        double recon = std::nan("");
        std::string scheme = mf.cycle_rows.empty() ? "?" : mf.cycle_rows.back().scheme;
        if (mf.has_summary) {
            recon = MetricsFile::as_double(mf.summary.raw[static_cast<size_t>(c_recon)]);
            scheme = mf.summary.scheme;
        }
        std::snprintf(buf, sizeof(buf), "%-8s %14llu %10.4f %12.4g %14.4g %14.4g %14.4g\n",
                      scheme.c_str(), static_cast<unsigned long long>(bits), acc, recon, comp,
                      comm, comp + comm);
        os << buf;
    }
    return os.str();
}

}  // namespace wirelearn
