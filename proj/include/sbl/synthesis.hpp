#pragma once

#include <cstdint>

#include "sbl/gaussian_process.hpp"
#include "sbl/trace.hpp"

namespace sbl {

/// Rotating-groundglass speckle process.
struct SpeckleParams {
    double coherence_time = 4.63e-6; // field correlation time, seconds
    double mean_intensity = 1e6;     // photons/second
    AcfShape shape = AcfShape::gaussian;
};

/// Electro-optical intensity modulator driven by band-limited Gaussian noise.
struct ModulationParams {
    double correlation_time = 1.28e-6; // drive correlation time, seconds
    double v_pp = 0.0;                 // peak-to-peak drive voltage
    double v_pi = 10.0;                // half-wave voltage of the modulator
    double bias_phase = 0.0;           // radians
    AcfShape shape = AcfShape::gaussian;
};

/// How the unscattered laser component combines with the speckle.
enum class MixModel { field_level, intensity_level };

struct MixParams {
    double coherent_fraction = 0.0; // fraction of the mean intensity, in [0,1]
    MixModel model = MixModel::field_level;
};

/// Complex speckle field: circular Gaussian, <|E|^2> = mean_intensity, field
/// autocorrelation rho(t) of the configured shape and coherence time.
FieldTrace gen_speckle_field(const SpeckleParams& params, double duration, double dt,
                             std::uint64_t seed);

/// |E(t)|^2 of the speckle field: exponentially distributed intensity with
/// sample g2(0) -> 2 on long traces.
IntensityTrace gen_speckle_intensity(const SpeckleParams& params, double duration, double dt,
                                     std::uint64_t seed);

/// Modulator transmission T(t) = sin^2(pi v(t) / (2 v_pi) + bias_phase), with
/// v(t) a stationary Gaussian drive of standard deviation v_pp/6 (peak-to-peak
/// mapped to +-3 sigma). All samples lie in [0, 1].
IntensityTrace gen_modulation_intensity(const ModulationParams& params, double duration, double dt,
                                        std::uint64_t seed);

/// Adds the unscattered laser component to a speckle field. Field-level model:
/// I = |alpha + sqrt(1-eps) E|^2 with |alpha|^2 = eps <I>; intensity-level
/// model: I = eps <I> + (1-eps) |E|^2. Output mean equals the speckle mean.
IntensityTrace mix_coherent_background(const FieldTrace& speckle_field, const MixParams& params);

/// Same operation on an intensity trace. The underlying field is regenerated
/// from (speckle_params, seed), which must be the pair the trace was generated
/// with; a mismatch is detected and rejected.
IntensityTrace mix_coherent_background(const IntensityTrace& speckle,
                                       const SpeckleParams& speckle_params,
                                       const MixParams& params, std::uint64_t seed);

/// Closed-form g2(0) of the modulator transmission over the Gaussian drive.
double modulation_g2_zero(const ModulationParams& params);

/// Closed-form g2(0) of speckle with a coherent background: 2 - eps^2 for the
/// field-level model, 1 + (1-eps)^2 for the intensity-level one.
double mixed_speckle_g2_zero(const MixParams& params);

/// Coherent fraction that yields a given g2(0) under the chosen mix model.
double solve_coherent_fraction(double target_g2, MixModel model);

} // namespace sbl
