#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sbl/config.hpp"
#include "sbl/fit.hpp"
#include "sbl/statistics.hpp"

namespace sbl {

/// Photon-number statistics at one mean-count target.
struct PhotonNumberResult {
    double target_mean;
    double measured_mean;
    ValueWithError g2_c;
    TailMetrics tail_vs_geometric;
    CountHistogram histogram;
};

struct RunReport {
    ExperimentConfig config;
    CorrelationFunction correlation;
    FitResult fit;
    ValueWithError g2_m;           // fitted zero-lag coherence from the HBT arm
    double zero_lag_direct = 0.0;  // inverse-variance mean of the central bins
    double trace_g2_zero = 0.0;    // <I^2>/<I>^2 of the generated trace
    std::vector<PhotonNumberResult> photon_numbers;
};

/// Runs the full synthesis -> detection -> statistics pipeline. Pure function
/// of the config (all randomness flows from config.seed).
RunReport run_experiment(const ExperimentConfig& config);

/// Writes the P(n) CSVs, g2(tau) CSV, fit JSON and summary JSON for one run
/// into config.output_dir (files are written atomically).
void write_report(const RunReport& report, const std::filesystem::path& dir);

std::string summary_json(const RunReport& report);
std::string fit_json(const RunReport& report);

struct Table1Result {
    std::vector<RunReport> rows;
};

/// Runs each config (up to `workers` concurrently) and collects the
/// measured-vs-calculated coherence table.
Table1Result run_table1(const std::vector<ExperimentConfig>& configs, unsigned workers = 1);

std::string table1_text(const Table1Result& table);
std::string table1_json(const Table1Result& table);

/// Solves modulator depth / bias and coherent fraction so the zero-lag
/// coherence of each emitted config equals the corresponding target. The
/// first (smallest) target fixes the coherent fraction; the ratio to it fixes
/// the modulation. Targets must be >= 1.
std::vector<ExperimentConfig> calibrate_targets(const ExperimentConfig& base,
                                                const std::vector<double>& targets);

std::string calibration_json(const std::vector<ExperimentConfig>& configs);

} // namespace sbl
