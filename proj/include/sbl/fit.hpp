#pragma once

#include <array>

#include "sbl/statistics.hpp"

namespace sbl {

/// Correlation model fitted to g2(tau):
///   g2(tau) = [1 + a exp(-mod_exponent (tau/tau_m)^2)]
///           * [1 + b exp(-speckle_exponent (tau/tau_g)^2)].
/// The speckle factor of a circular Gaussian field is 1 + |rho(tau)|^2, so its
/// default exponent is 2 and the fitted tau_g estimates the field coherence
/// time directly. The modulation factor decays with the drive correlation
/// time (exponent 1) near the linear operating point; a quadratic operating
/// point (bias near 0) doubles the exponent.
struct FitModel {
    double mod_exponent = 1.0;
    double speckle_exponent = 2.0;
};

struct FitResult {
    double a = 0.0;
    double b = 0.0;
    double tau_m = 0.0; // seconds
    double tau_g = 0.0; // seconds
    double g2_zero = 0.0;

    double a_err = 0.0;
    double b_err = 0.0;
    double tau_m_err = 0.0;
    double tau_g_err = 0.0;
    double g2_zero_err = 0.0;

    double residual_norm = 0.0; // sqrt(weighted chi-square)
    int iterations = 0;
    bool converged = false;

    /// Parameter covariance in (a, b, tau_m, tau_g) order; empty when the
    /// normal equations were singular. Fixed parameters get zero rows.
    std::vector<std::vector<double>> covariance;
};

double eval_fit_model(const FitModel& model, const FitResult& p, double lag);

/// Weighted least squares (weights 1/stderr^2) via damped Gauss-Newton.
/// With fix_a the modulation contrast is pinned at init.a (single-timescale
/// fit). tau_m < tau_g is enforced by swapping the factors on convergence
/// when their envelope exponents coincide.
FitResult fit_two_timescale(const CorrelationFunction& cf, const FitResult& init,
                            const FitModel& model = {}, bool fix_a = false);

} // namespace sbl
