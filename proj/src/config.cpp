#include "sbl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sbl {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ConfigError("config: " + field + ": " + message);
}

double require_positive(double v, const std::string& field) {
    if (!(v > 0.0)) fail(field, "must be > 0");
    return v;
}

double require_nonnegative(double v, const std::string& field) {
    if (!(v >= 0.0)) fail(field, "must be >= 0");
    return v;
}

double require_fraction(double v, const std::string& field) {
    if (!(v >= 0.0 && v <= 1.0)) fail(field, "must be in [0,1]");
    return v;
}

AcfShape parse_shape(const std::string& s, const std::string& field) {
    if (s == "gaussian") return AcfShape::gaussian;
    if (s == "exponential") return AcfShape::exponential;
    fail(field, "expected 'gaussian' or 'exponential', got '" + s + "'");
}

std::string shape_name(AcfShape s) {
    return s == AcfShape::gaussian ? "gaussian" : "exponential";
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& scope) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(scope + key, std::string("bad value: ") + e.what());
    }
}

} // namespace

double ExperimentConfig::effective_dt() const {
    if (dt > 0.0) return dt;
    double tightest = speckle.coherence_time;
    if (modulation) tightest = std::min(tightest, modulation->correlation_time);
    return tightest / 16.0;
}

double ExperimentConfig::fit_mod_exponent_effective() const {
    if (fit_mod_exponent > 0.0) return fit_mod_exponent;
    if (!modulation) return 1.0;
    // Near zero bias the transmission responds quadratically to the drive, so
    // its correlation envelope is the square of the drive autocorrelation.
    const double c2b = std::cos(2.0 * modulation->bias_phase);
    return (c2b * c2b > 0.5) ? 2.0 : 1.0;
}

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& source_name) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(source_name + ": invalid JSON: " + e.what());
    }

    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name, "");
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "");
    c.duration = get_or<double>(j, "duration", c.duration, "");
    c.dt = get_or<double>(j, "dt", c.dt, "");
    c.mean_rate_target = get_or<double>(j, "mean_rate_target", c.mean_rate_target, "");
    c.single_trace_rescaling =
        get_or<bool>(j, "single_trace_rescaling", c.single_trace_rescaling, "");
    c.fit_mod_exponent = get_or<double>(j, "fit_mod_exponent", c.fit_mod_exponent, "");
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string(), "");
    c.mean_photon_targets =
        get_or<std::vector<double>>(j, "mean_photon_targets", c.mean_photon_targets, "");

    if (j.contains("speckle")) {
        const auto& s = j.at("speckle");
        c.speckle.coherence_time =
            get_or<double>(s, "coherence_time", c.speckle.coherence_time, "speckle.");
        c.speckle.mean_intensity =
            get_or<double>(s, "mean_intensity", c.speckle.mean_intensity, "speckle.");
        c.speckle.shape = parse_shape(
            get_or<std::string>(s, "shape", shape_name(c.speckle.shape), "speckle."),
            "speckle.shape");
    }
    if (j.contains("modulation") && !j.at("modulation").is_null()) {
        const auto& m = j.at("modulation");
        ModulationParams mp;
        mp.correlation_time =
            get_or<double>(m, "correlation_time", mp.correlation_time, "modulation.");
        mp.v_pp = get_or<double>(m, "v_pp", mp.v_pp, "modulation.");
        mp.v_pi = get_or<double>(m, "v_pi", mp.v_pi, "modulation.");
        mp.bias_phase = get_or<double>(m, "bias_phase", mp.bias_phase, "modulation.");
        mp.shape = parse_shape(get_or<std::string>(m, "shape", shape_name(mp.shape), "modulation."),
                               "modulation.shape");
        c.modulation = mp;
    }
    if (j.contains("mix")) {
        const auto& m = j.at("mix");
        c.mix.coherent_fraction =
            get_or<double>(m, "coherent_fraction", c.mix.coherent_fraction, "mix.");
        const auto model = get_or<std::string>(
            m, "model", c.mix.model == MixModel::field_level ? "field" : "intensity", "mix.");
        if (model == "field")
            c.mix.model = MixModel::field_level;
        else if (model == "intensity")
            c.mix.model = MixModel::intensity_level;
        else
            fail("mix.model", "expected 'field' or 'intensity', got '" + model + "'");
    }
    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        c.detector.dead_time = get_or<double>(d, "dead_time", c.detector.dead_time, "detector.");
        c.detector.jitter_rms = get_or<double>(d, "jitter_rms", c.detector.jitter_rms, "detector.");
        c.detector.efficiency = get_or<double>(d, "efficiency", c.detector.efficiency, "detector.");
        c.detector.dark_rate = get_or<double>(d, "dark_rate", c.detector.dark_rate, "detector.");
    }
    if (j.contains("window")) {
        const auto& w = j.at("window");
        c.window.width = get_or<double>(w, "width", c.window.width, "window.");
        c.window.count = get_or<std::uint64_t>(w, "count", c.window.count, "window.");
        c.window.stride = get_or<double>(w, "stride", c.window.stride, "window.");
    }
    if (j.contains("coincidence")) {
        const auto& cc = j.at("coincidence");
        c.coincidence.bin = get_or<double>(cc, "bin", c.coincidence.bin, "coincidence.");
        c.coincidence.max_lag = get_or<double>(cc, "max_lag", c.coincidence.max_lag, "coincidence.");
        const auto norm = get_or<std::string>(
            cc, "normalization",
            c.coincidence.normalization == CoincidenceNorm::accidental_rate ? "accidental"
                                                                            : "far_lag_baseline",
            "coincidence.");
        if (norm == "accidental")
            c.coincidence.normalization = CoincidenceNorm::accidental_rate;
        else if (norm == "far_lag_baseline")
            c.coincidence.normalization = CoincidenceNorm::far_lag_baseline;
        else
            fail("coincidence.normalization",
                 "expected 'accidental' or 'far_lag_baseline', got '" + norm + "'");
    }

    validate(c);
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path.string());
}

std::string experiment_config_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["duration"] = c.duration;
    j["dt"] = c.dt;
    j["speckle"] = {{"coherence_time", c.speckle.coherence_time},
                    {"mean_intensity", c.speckle.mean_intensity},
                    {"shape", shape_name(c.speckle.shape)}};
    if (c.modulation) {
        j["modulation"] = {{"correlation_time", c.modulation->correlation_time},
                           {"v_pp", c.modulation->v_pp},
                           {"v_pi", c.modulation->v_pi},
                           {"bias_phase", c.modulation->bias_phase},
                           {"shape", shape_name(c.modulation->shape)}};
    } else {
        j["modulation"] = nullptr;
    }
    j["mix"] = {{"coherent_fraction", c.mix.coherent_fraction},
                {"model", c.mix.model == MixModel::field_level ? "field" : "intensity"}};
    j["detector"] = {{"dead_time", c.detector.dead_time},
                     {"jitter_rms", c.detector.jitter_rms},
                     {"efficiency", c.detector.efficiency},
                     {"dark_rate", c.detector.dark_rate}};
    j["mean_rate_target"] = c.mean_rate_target;
    j["window"] = {{"width", c.window.width},
                   {"count", c.window.count},
                   {"stride", c.window.stride}};
    j["coincidence"] = {
        {"bin", c.coincidence.bin},
        {"max_lag", c.coincidence.max_lag},
        {"normalization", c.coincidence.normalization == CoincidenceNorm::accidental_rate
                              ? "accidental"
                              : "far_lag_baseline"}};
    j["mean_photon_targets"] = c.mean_photon_targets;
    j["single_trace_rescaling"] = c.single_trace_rescaling;
    j["fit_mod_exponent"] = c.fit_mod_exponent;
    j["output_dir"] = c.output_dir.string();
    return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& c) {
    require_positive(c.duration, "duration");
    require_positive(c.speckle.coherence_time, "speckle.coherence_time");
    require_nonnegative(c.speckle.mean_intensity, "speckle.mean_intensity");
    if (c.modulation) {
        require_positive(c.modulation->correlation_time, "modulation.correlation_time");
        require_nonnegative(c.modulation->v_pp, "modulation.v_pp");
        require_positive(c.modulation->v_pi, "modulation.v_pi");
    }
    require_fraction(c.mix.coherent_fraction, "mix.coherent_fraction");
    require_nonnegative(c.detector.dead_time, "detector.dead_time");
    require_nonnegative(c.detector.jitter_rms, "detector.jitter_rms");
    require_fraction(c.detector.efficiency, "detector.efficiency");
    require_nonnegative(c.detector.dark_rate, "detector.dark_rate");
    require_positive(c.mean_rate_target, "mean_rate_target");
    require_positive(c.window.width, "window.width");
    if (c.window.count == 0) fail("window.count", "must be >= 1");
    if (c.window.stride != 0.0 && c.window.stride < c.window.width)
        fail("window.stride", "must be 0 (contiguous) or >= window.width");
    require_positive(c.coincidence.bin, "coincidence.bin");
    if (c.coincidence.max_lag < 10.0 * c.coincidence.bin)
        fail("coincidence.max_lag", "must be >= 10 * coincidence.bin");
    if (c.mean_photon_targets.empty()) fail("mean_photon_targets", "must not be empty");
    for (double t : c.mean_photon_targets) {
        if (!(t > 0.0)) fail("mean_photon_targets", "targets must be > 0");
        if (t > c.mean_rate_target * c.window.width)
            fail("mean_photon_targets",
                 "target " + std::to_string(t) +
                     " needs efficiency > 1; raise mean_rate_target or window.width");
    }

    const double stride = c.window.stride == 0.0 ? c.window.width : c.window.stride;
    const double needed = static_cast<double>(c.window.count - 1) * stride + c.window.width;
    if (c.duration + 1e-9 * c.window.width < needed)
        fail("duration", "must be >= window.count * window stride (" + std::to_string(needed) +
                             " s needed)");

    double tightest = c.speckle.coherence_time;
    if (c.modulation) tightest = std::min(tightest, c.modulation->correlation_time);
    if (c.effective_dt() > tightest / 10.0)
        fail("dt", "must be <= min(coherence_time, correlation_time) / 10");
}

} // namespace sbl
