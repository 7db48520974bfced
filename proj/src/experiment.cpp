#include "sbl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "sbl/io.hpp"
#include "sbl/rng.hpp"
#include "sbl/synthesis.hpp"

namespace sbl {

using nlohmann::json;

namespace {

// Sub-stream tags for deriving independent seeds from the experiment seed.
enum SeedTag : std::uint64_t {
    kSpeckleSeed = 1,
    kModulationSeed = 2,
    kHbtArrivalsSeed = 3,
    kSplitSeed = 4,
    kDarkBase = 8,      // +channel
    kJitterBase = 12,   // +channel
    kCountingBase = 32, // +target index
    kSeparateTraceBase = 64,
};

PhotonStream detect(const PhotonStream& raw, const DetectorParams& det, std::uint64_t dark_seed,
                    std::uint64_t jitter_seed) {
    PhotonStream s = add_dark_counts(raw, det.dark_rate, dark_seed);
    s = apply_dead_time(s, det.dead_time);
    return apply_jitter(s, det.jitter_rms, jitter_seed);
}

IntensityTrace build_source_trace(const ExperimentConfig& c, std::uint64_t seed) {
    const double dt = c.effective_dt();
    const FieldTrace field =
        gen_speckle_field(c.speckle, c.duration, dt, derive_seed(seed, kSpeckleSeed));
    IntensityTrace source = mix_coherent_background(field, c.mix);
    if (c.modulation) {
        const IntensityTrace transmission = gen_modulation_intensity(
            *c.modulation, c.duration, dt, derive_seed(seed, kModulationSeed));
        source = multiply_traces(transmission, source);
    }
    return rescale_to_mean(source, c.mean_rate_target);
}

double weighted_zero_lag(const CorrelationFunction& cf) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < cf.lags.size(); ++i) {
        if (std::abs(cf.lags[i]) > 2.0 * cf.bin_width) continue;
        const double w = cf.stderrs[i] > 0.0 ? 1.0 / (cf.stderrs[i] * cf.stderrs[i]) : 1.0;
        num += w * cf.values[i];
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

} // namespace

RunReport run_experiment(const ExperimentConfig& config) {
    validate(config);
    const std::uint64_t seed = config.seed;

    const IntensityTrace source = build_source_trace(config, seed);

    // HBT arm: one stream split 1:1 onto two detectors.
    const PhotonStream hbt_in = sample_arrivals(source, config.detector.efficiency,
                                                derive_seed(seed, kHbtArrivalsSeed));
    auto [raw1, raw2] = beam_split(hbt_in, 0.5, derive_seed(seed, kSplitSeed));
    const PhotonStream ch1 = detect(raw1, config.detector, derive_seed(seed, kDarkBase + 1),
                                    derive_seed(seed, kJitterBase + 1));
    const PhotonStream ch2 = detect(raw2, config.detector, derive_seed(seed, kDarkBase + 2),
                                    derive_seed(seed, kJitterBase + 2));

    RunReport report{.config = config,
                     .correlation = coincidence_histogram(ch1, ch2, config.coincidence.bin,
                                                          config.coincidence.max_lag,
                                                          config.coincidence.normalization),
                     .fit = {},
                     .g2_m = {},
                     .zero_lag_direct = 0.0,
                     .trace_g2_zero = source.sample_g2_zero(),
                     .photon_numbers = {}};

    FitResult init;
    init.b = std::max(mixed_speckle_g2_zero(config.mix) - 1.0, 0.05);
    init.tau_g = config.speckle.coherence_time;
    const bool has_modulation = config.modulation.has_value();
    if (has_modulation) {
        init.a = std::max(modulation_g2_zero(*config.modulation) - 1.0, 0.05);
        init.tau_m = config.modulation->correlation_time;
    } else {
        init.a = 0.0;
        init.tau_m = config.speckle.coherence_time; // inert under fix_a
    }
    FitModel model;
    model.mod_exponent = config.fit_mod_exponent_effective();
    report.fit = fit_two_timescale(report.correlation, init, model, !has_modulation);
    report.g2_m = {report.fit.g2_zero, report.fit.g2_zero_err};
    report.zero_lag_direct = weighted_zero_lag(report.correlation);

    // Photon-number arm: one detector, rate rescaled per target.
    for (std::size_t k = 0; k < config.mean_photon_targets.size(); ++k) {
        const double target = config.mean_photon_targets[k];
        const double eff = target / (config.mean_rate_target * config.window.width);
        const IntensityTrace* trace = &source;
        IntensityTrace separate_trace = source; // reused storage when not rescaling
        if (!config.single_trace_rescaling) {
            separate_trace = build_source_trace(config, derive_seed(seed, kSeparateTraceBase + k));
            trace = &separate_trace;
        }
        PhotonStream raw = sample_arrivals(*trace, eff, derive_seed(seed, kCountingBase + k));
        const PhotonStream stream =
            detect(raw, config.detector, derive_seed(seed, kCountingBase + k + 100),
                   derive_seed(seed, kCountingBase + k + 200));
        CountHistogram hist =
            count_windows(stream, config.window.width, config.window.count, config.window.stride);
        report.photon_numbers.push_back(PhotonNumberResult{
            .target_mean = target,
            .measured_mean = hist.mean(),
            .g2_c = g2_from_histogram(hist),
            .tail_vs_geometric = tail_metrics(hist, geometric_pmf),
            .histogram = std::move(hist)});
    }
    return report;
}

std::string fit_json(const RunReport& report) {
    const FitResult& f = report.fit;
    json j;
    j["a"] = f.a;
    j["b"] = f.b;
    j["tau_m_seconds"] = f.tau_m;
    j["tau_g_seconds"] = f.tau_g;
    j["g2_zero"] = f.g2_zero;
    j["stderr"] = {{"a", f.a_err},
                   {"b", f.b_err},
                   {"tau_m_seconds", f.tau_m_err},
                   {"tau_g_seconds", f.tau_g_err},
                   {"g2_zero", f.g2_zero_err}};
    j["covariance_order"] = {"a", "b", "tau_m", "tau_g"};
    j["covariance"] = f.covariance;
    j["residual_norm"] = f.residual_norm;
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    return j.dump(2) + "\n";
}

namespace {

json tail_metrics_json(const TailMetrics& tm) {
    json j;
    j["kl_divergence"] = tm.kl_infinite ? json("infinity") : json(tm.kl_divergence);
    j["chi_square"] = std::isfinite(tm.chi_square) ? json(tm.chi_square) : json("infinity");
    j["chi_square_cells"] = tm.chi_square_cells;
    for (const auto& [k, ratio] : tm.tail_ratio) {
        j["tail_ratio"][std::to_string(k)] =
            std::isfinite(ratio) ? json(ratio) : json("infinity");
        const double sigma = tm.tail_sigma.at(k);
        j["tail_sigma"][std::to_string(k)] =
            std::isfinite(sigma) ? json(sigma) : json("infinity");
    }
    return j;
}

} // namespace

std::string summary_json(const RunReport& report) {
    json j;
    j["name"] = report.config.name;
    j["seed"] = report.config.seed;
    j["g2_m"] = {{"value", report.g2_m.value}, {"stderr", report.g2_m.stderror}};
    j["g2_zero_direct_bins"] = report.zero_lag_direct;
    j["g2_zero_trace"] = report.trace_g2_zero;
    j["photon_numbers"] = json::array();
    for (const auto& pn : report.photon_numbers) {
        json p;
        p["target_mean"] = pn.target_mean;
        p["measured_mean"] = pn.measured_mean;
        p["g2_c"] = {{"value", pn.g2_c.value}, {"stderr", pn.g2_c.stderror}};
        p["tail_vs_geometric"] = tail_metrics_json(pn.tail_vs_geometric);
        j["photon_numbers"].push_back(std::move(p));
    }
    return j.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "g2_tau.csv", correlation_csv(report.correlation));
    write_file_atomic(dir / "fit.json", fit_json(report));
    write_file_atomic(dir / "summary.json", summary_json(report));
    for (const auto& pn : report.photon_numbers) {
        char name[64];
        std::snprintf(name, sizeof(name), "pn_%.2f.csv", pn.target_mean);
        write_file_atomic(dir / name, histogram_csv(pn.histogram));
    }
}

Table1Result run_table1(const std::vector<ExperimentConfig>& configs, unsigned workers) {
    if (configs.empty()) throw ConfigError("table1: empty config list");
    if (workers == 0) workers = 1;

    Table1Result table;
    table.rows.reserve(configs.size());
    std::vector<std::future<RunReport>> futures(configs.size());
    std::size_t launched = 0, collected = 0;
    while (collected < configs.size()) {
        while (launched < configs.size() && launched - collected < workers) {
            const auto& cfg = configs[launched];
            futures[launched] = std::async(std::launch::async,
                                           [&cfg] { return run_experiment(cfg); });
            ++launched;
        }
        table.rows.push_back(futures[collected].get());
        ++collected;
    }
    return table;
}

std::string table1_text(const Table1Result& table) {
    std::ostringstream out;
    const auto& targets = table.rows.front().config.mean_photon_targets;
    out << "condition            g2_m(HBT)        ";
    for (double t : targets) out << "g2_c(" << fmt(t, 2) << ")   ";
    out << "\n";
    for (const auto& row : table.rows) {
        char name[32];
        std::snprintf(name, sizeof(name), "%-20s", row.config.name.c_str());
        out << name << " " << fmt(row.g2_m.value, 3) << " +- " << fmt(row.g2_m.stderror, 3)
            << "  ";
        for (const auto& pn : row.photon_numbers) out << fmt(pn.g2_c.value, 3) << "        ";
        out << "\n";
    }
    return out.str();
}

std::string table1_json(const Table1Result& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json r;
        r["name"] = row.config.name;
        r["g2_m"] = {{"value", row.g2_m.value}, {"stderr", row.g2_m.stderror}};
        r["g2_c"] = json::array();
        for (const auto& pn : row.photon_numbers) {
            r["g2_c"].push_back({{"mean", pn.measured_mean},
                                 {"target_mean", pn.target_mean},
                                 {"value", pn.g2_c.value},
                                 {"stderr", pn.g2_c.stderror}});
        }
        rows.push_back(std::move(r));
    }
    return json{{"rows", rows}}.dump(2) + "\n";
}

namespace {

// Drive depth (as phase sigma) solving g2_mod == target at the given bias.
double solve_drive_sigma(double target, double bias, double v_pi) {
    auto g2_at = [&](double sigma) {
        ModulationParams p;
        p.v_pi = v_pi;
        p.bias_phase = bias;
        p.v_pp = 6.0 * v_pi * sigma / std::numbers::pi;
        return modulation_g2_zero(p);
    };
    double lo = 1e-6, hi = 15.0;
    const double g_lo = g2_at(lo), g_hi = g2_at(hi);
    const bool increasing = g_hi > g_lo;
    const double low = std::min(g_lo, g_hi), high = std::max(g_lo, g_hi);
    if (target < low - 1e-6 || target > high + 1e-6)
        throw ConfigError("calibrate: modulation g2 target " + std::to_string(target) +
                          " is outside the reachable range [" + std::to_string(low) + ", " +
                          std::to_string(high) + "] at this bias");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((g2_at(mid) < target) == increasing)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

std::vector<ExperimentConfig> calibrate_targets(const ExperimentConfig& base,
                                                const std::vector<double>& targets) {
    if (targets.empty()) throw ConfigError("calibrate: empty target list");
    for (double t : targets)
        if (!(t >= 1.0)) throw ConfigError("calibrate: targets must be >= 1 (classical light)");
    const double base_g2 = targets.front();
    if (base_g2 > 2.0)
        throw ConfigError("calibrate: first target must be <= 2 (unmodulated speckle)");

    const double eps = solve_coherent_fraction(base_g2, base.mix.model);
    const double v_pi = base.modulation ? base.modulation->v_pi : ModulationParams{}.v_pi;
    const double tau_m =
        base.modulation ? base.modulation->correlation_time : ModulationParams{}.correlation_time;

    std::vector<ExperimentConfig> configs;
    configs.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        ExperimentConfig cfg = base;
        cfg.seed = derive_seed(base.seed, 1000 + i);
        cfg.mix.coherent_fraction = eps;
        char name[32];
        std::snprintf(name, sizeof(name), "g2_%.2f", targets[i]);
        cfg.name = name;

        const double needed_mod = targets[i] / base_g2;
        if (needed_mod <= 1.0 + 1e-9) {
            cfg.modulation.reset();
        } else {
            ModulationParams mp;
            mp.correlation_time = tau_m;
            mp.v_pi = v_pi;
            // The sin^2 transmission reaches g2 of at most 1.5 at the linear
            // bias point and up to 3 at zero bias.
            mp.bias_phase = needed_mod < 1.5 ? std::numbers::pi / 4.0 : 0.0;
            const double sigma = solve_drive_sigma(needed_mod, mp.bias_phase, v_pi);
            mp.v_pp = 6.0 * v_pi * sigma / std::numbers::pi;
            if (base.modulation) mp.shape = base.modulation->shape;
            cfg.modulation = mp;
        }
        validate(cfg);
        configs.push_back(std::move(cfg));
    }
    return configs;
}

std::string calibration_json(const std::vector<ExperimentConfig>& configs) {
    json j = json::array();
    for (const auto& cfg : configs) {
        json row;
        row["name"] = cfg.name;
        row["coherent_fraction"] = cfg.mix.coherent_fraction;
        const double speckle_g2 = mixed_speckle_g2_zero(cfg.mix);
        double mod_g2 = 1.0;
        if (cfg.modulation) {
            row["v_pp"] = cfg.modulation->v_pp;
            row["bias_phase"] = cfg.modulation->bias_phase;
            mod_g2 = modulation_g2_zero(*cfg.modulation);
        }
        row["predicted_g2_zero"] = speckle_g2 * mod_g2;
        j.push_back(std::move(row));
    }
    return json{{"configs", j}}.dump(2) + "\n";
}

} // namespace sbl
