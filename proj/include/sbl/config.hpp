#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbl/detection.hpp"
#include "sbl/statistics.hpp"
#include "sbl/synthesis.hpp"

namespace sbl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WindowConfig {
    double width = 5e-6;           // seconds
    std::uint64_t count = 100000;  // number of collecting windows
    double stride = 0.0;           // 0 means contiguous (stride == width)
};

struct CoincidenceConfig {
    double bin = 165e-12; // seconds
    double max_lag = 20e-6;
    CoincidenceNorm normalization = CoincidenceNorm::accidental_rate;
};

/// Full parameterization of one simulated run.
struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    double duration = 0.5; // seconds of simulated time
    double dt = 0.0;       // trace sample spacing; 0 = auto (tightest timescale / 16)

    SpeckleParams speckle;
    std::optional<ModulationParams> modulation;
    MixParams mix;
    DetectorParams detector;

    double mean_rate_target = 4e5; // photons/second at the HBT input
    WindowConfig window;
    CoincidenceConfig coincidence;
    std::vector<double> mean_photon_targets = {0.1, 0.25, 0.5};
    /// Reuse one trace with rescaled efficiencies for the photon-number
    /// targets (false: independent traces per target).
    bool single_trace_rescaling = true;

    /// Envelope exponent of the modulation factor in the g2 fit; 0 = choose
    /// from the bias point (quadratic response near zero bias).
    double fit_mod_exponent = 0.0;

    std::filesystem::path output_dir = "out";

    double effective_dt() const;
    double fit_mod_exponent_effective() const;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& source_name = "config");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

} // namespace sbl
