#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "mdseq/msm.hpp"
#include "mdseq/types.hpp"

namespace mdseq {

struct ReportConfig {
    std::vector<int> lags = {1, 2, 5, 10, 20};
    int k_its = 3;
    int mfpt_lag = 1;  // frames
    int n_boot = 50;
    std::uint64_t seed = 0;
    nlohmann::json provenance;  // checkpoint hash, configs; copied verbatim
};

/// Paired statistic with bootstrap uncertainty on both sides.
struct PairedValue {
    double ref = 0.0, ref_std = 0.0;
    double gen = 0.0, gen_std = 0.0;
};

/// Side-by-side kinetic and thermodynamic comparison between a reference
/// ensemble and a generated one: per-state free energy, ITS-vs-lag curves
/// and the MFPT matrix at a designated lag. Both sides use identical lags
/// and estimators; both carry bootstrap stds.
struct EvalReport {
    int n_states = 0;
    double dt_ps = 0.0;
    std::vector<double> lag_ps;
    std::vector<PairedValue> free_energy;                // per state
    std::vector<std::vector<PairedValue>> its;           // [lag][timescale]
    std::vector<std::vector<PairedValue>> mfpt;          // [from][to], diagonal zero
    ReportConfig config;

    nlohmann::json to_json() const;
};

EvalReport build_report(const std::vector<Trajectory>& reference,
                        const std::vector<Trajectory>& generated, const ReportConfig& cfg);

/// report.json, free_energy.csv, its.csv, mfpt.csv, plots/*.svg.
void write_report(const std::string& dir, const EvalReport& report);

}  // namespace mdseq
