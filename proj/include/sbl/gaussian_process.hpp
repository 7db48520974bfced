#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace sbl {

/// Shape of the normalized autocorrelation of a synthesized Gaussian process.
enum class AcfShape { gaussian, exponential };

/// rho(t) for the given shape and correlation time.
double acf_value(AcfShape shape, double t, double corr_time);

/// Samples a stationary circular complex Gaussian process x on a uniform grid
/// of n points with spacing dt, such that
///   E[x_j conj(x_l)] = variance * rho((j-l) dt),   E[x_j x_l] = 0.
/// Real and imaginary parts are independent real stationary Gaussian processes,
/// each with covariance (variance/2) * rho.
///
/// Synthesis is by circulant embedding: the covariance is realized exactly on
/// the grid up to clamping of tiny negative embedding eigenvalues. Output is
/// deterministic for a given (n, dt, shape, corr_time, variance, seed).
std::vector<std::complex<double>> sample_circular_gaussian(std::size_t n, double dt,
                                                           AcfShape shape, double corr_time,
                                                           double variance, std::uint64_t seed);

} // namespace sbl
