#include "sbl/synthesis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sbl {

namespace {

std::size_t grid_size(double duration, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("synthesis: dt must be > 0");
    if (!(duration >= dt)) throw std::invalid_argument("synthesis: duration must be >= dt");
    // round up so the trace always covers the requested duration
    return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

void check_resolution(double dt, double corr_time, const char* what) {
    if (dt > corr_time / 10.0)
        throw std::invalid_argument(std::string("synthesis: dt must be <= ") + what + "/10");
}

double drive_sigma_phase(const ModulationParams& p) {
    // Gaussian drive with sigma_v = v_pp/6, expressed as the std dev of the
    // phase argument u = pi v / v_pi of cos(u + 2 bias).
    return std::numbers::pi * p.v_pp / (6.0 * p.v_pi);
}

} // namespace

FieldTrace gen_speckle_field(const SpeckleParams& params, double duration, double dt,
                             std::uint64_t seed) {
    if (!(params.coherence_time > 0.0))
        throw std::invalid_argument("gen_speckle_field: coherence_time must be > 0");
    if (!(params.mean_intensity >= 0.0))
        throw std::invalid_argument("gen_speckle_field: mean_intensity must be >= 0");
    check_resolution(dt, params.coherence_time, "coherence_time");
    const std::size_t n = grid_size(duration, dt);
    auto field = sample_circular_gaussian(n, dt, params.shape, params.coherence_time,
                                          params.mean_intensity, seed);
    return FieldTrace(dt, std::move(field));
}

IntensityTrace gen_speckle_intensity(const SpeckleParams& params, double duration, double dt,
                                     std::uint64_t seed) {
    return gen_speckle_field(params, duration, dt, seed).intensity();
}

IntensityTrace gen_modulation_intensity(const ModulationParams& params, double duration, double dt,
                                        std::uint64_t seed) {
    if (!(params.correlation_time > 0.0))
        throw std::invalid_argument("gen_modulation_intensity: correlation_time must be > 0");
    if (!(params.v_pi > 0.0))
        throw std::invalid_argument("gen_modulation_intensity: v_pi must be > 0");
    if (!(params.v_pp >= 0.0))
        throw std::invalid_argument("gen_modulation_intensity: v_pp must be >= 0");
    check_resolution(dt, params.correlation_time, "correlation_time");
    const std::size_t n = grid_size(duration, dt);

    const double sigma_v = params.v_pp / 6.0;
    // Real part of a circular complex process with total variance 2 sigma^2
    // is a real Gaussian process with variance sigma^2.
    auto drive = sample_circular_gaussian(n, dt, params.shape, params.correlation_time,
                                          2.0 * sigma_v * sigma_v, seed);
    const double k = std::numbers::pi / (2.0 * params.v_pi);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sin(k * drive[i].real() + params.bias_phase);
        out[i] = s * s;
    }
    return IntensityTrace(dt, std::move(out));
}

IntensityTrace mix_coherent_background(const FieldTrace& speckle_field, const MixParams& params) {
    const double eps = params.coherent_fraction;
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::invalid_argument("mix_coherent_background: coherent_fraction must be in [0,1]");

    const IntensityTrace speckle = speckle_field.intensity();
    const double mu = speckle.mean();
    if (eps == 0.0) return speckle;
    if (mu == 0.0) return speckle; // nothing to mix into

    std::vector<double> out(speckle.size());
    if (params.model == MixModel::field_level) {
        const double alpha = std::sqrt(eps * mu);
        const double s = std::sqrt(1.0 - eps);
        const auto& e = speckle_field.samples();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::norm(std::complex<double>(alpha, 0.0) + s * e[i]);
    } else {
        const double base = eps * mu;
        const double s = 1.0 - eps;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = base + s * speckle[i];
    }
    return rescale_to_mean(IntensityTrace(speckle.dt(), std::move(out), speckle.origin()), mu);
}

IntensityTrace mix_coherent_background(const IntensityTrace& speckle,
                                       const SpeckleParams& speckle_params,
                                       const MixParams& params, std::uint64_t seed) {
    auto field = sample_circular_gaussian(speckle.size(), speckle.dt(), speckle_params.shape,
                                          speckle_params.coherence_time,
                                          speckle_params.mean_intensity, seed);
    for (std::size_t i = 0; i < speckle.size(); ++i) {
        if (std::norm(field[i]) != speckle[i])
            throw std::invalid_argument(
                "mix_coherent_background: trace was not generated from the given "
                "speckle params and seed");
    }
    return mix_coherent_background(FieldTrace(speckle.dt(), std::move(field), speckle.origin()),
                                   params);
}

double modulation_g2_zero(const ModulationParams& params) {
    if (!(params.v_pi > 0.0)) throw std::invalid_argument("modulation_g2_zero: v_pi must be > 0");
    const double s2 = [&] {
        const double s = drive_sigma_phase(params);
        return s * s;
    }();
    const double c2b = std::cos(2.0 * params.bias_phase);
    const double c4b = std::cos(4.0 * params.bias_phase);
    // T = (1 - cos(u + 2 bias)) / 2 with u ~ N(0, s2)
    const double mean_t = 0.5 * (1.0 - c2b * std::exp(-0.5 * s2));
    if (mean_t <= 0.0)
        throw std::domain_error("modulation_g2_zero: zero mean transmission");
    const double mean_t2 =
        0.25 * (1.0 - 2.0 * c2b * std::exp(-0.5 * s2) + 0.5 * (1.0 + c4b * std::exp(-2.0 * s2)));
    return mean_t2 / (mean_t * mean_t);
}

double mixed_speckle_g2_zero(const MixParams& params) {
    const double eps = params.coherent_fraction;
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::invalid_argument("mixed_speckle_g2_zero: coherent_fraction must be in [0,1]");
    if (params.model == MixModel::field_level) return 2.0 - eps * eps;
    return 1.0 + (1.0 - eps) * (1.0 - eps);
}

double solve_coherent_fraction(double target_g2, MixModel model) {
    if (model == MixModel::field_level) {
        if (target_g2 < 1.0 || target_g2 > 2.0)
            throw std::domain_error("solve_coherent_fraction: field-level g2 must be in [1,2]");
        return std::sqrt(2.0 - target_g2);
    }
    if (target_g2 < 1.0 || target_g2 > 2.0)
        throw std::domain_error("solve_coherent_fraction: intensity-level g2 must be in [1,2]");
    return 1.0 - std::sqrt(target_g2 - 1.0);
}

} // namespace sbl
