#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "sbl/detection.hpp"

namespace sbl {

/// Empirical photon-number distribution over fixed-width counting windows.
class CountHistogram {
public:
    CountHistogram(double window_width, std::vector<std::uint64_t> counts_per_n);

    double window_width() const { return window_width_; }
    std::uint64_t n_windows() const { return n_windows_; }
    /// counts_per_n[n] = number of windows containing exactly n photons.
    const std::vector<std::uint64_t>& counts_per_n() const { return counts_per_n_; }
    std::size_t max_count() const { return counts_per_n_.size() - 1; }

    double probability(std::size_t n) const;
    double mean() const;

private:
    double window_width_;
    std::uint64_t n_windows_;
    std::vector<std::uint64_t> counts_per_n_;
};

/// Counts photons in n_windows contiguous half-open windows [t, t+T) starting
/// at the stream's span begin. A stride > T gives gap-strided tiling.
CountHistogram count_windows(const PhotonStream& stream, double window_width,
                             std::uint64_t n_windows, double stride = 0.0);

struct ValueWithError {
    double value = 0.0;
    double stderror = 0.0;
};

/// g2_c(0) = sum P(n) n (n-1) / [sum P(n) n]^2, with a delta-method standard
/// error over the multinomial covariance of P(n).
ValueWithError g2_from_histogram(const CountHistogram& hist);

/// Bootstrap cross-check of the g2_c standard error (resamples windows).
double g2_bootstrap_stderr(const CountHistogram& hist, std::size_t n_resamples,
                           std::uint64_t seed);

/// Same estimator applied to exact probabilities (probs[n] = P(n)).
double g2_of_pmf(const std::vector<double>& probs);

/// Bose-Einstein law P(n) = mean^n / (1+mean)^(n+1).
double geometric_pmf(double mean, std::uint64_t n);
double poisson_pmf(double mean, std::uint64_t n);

/// Truncates a pmf where the cumulative mass exceeds 1 - tail_mass and
/// renormalizes, for moment computations.
std::vector<double> truncated_pmf(const std::function<double(double, std::uint64_t)>& pmf,
                                  double mean, double tail_mass = 1e-12);

/// Binned, normalized g2(t1 - t2) estimate with per-bin standard errors.
struct CorrelationFunction {
    double bin_width = 0.0;
    std::vector<double> lags; // bin centers, symmetric around 0
    std::vector<double> values;
    std::vector<double> stderrs;
};

enum class CoincidenceNorm {
    accidental_rate,  // r1 * r2 * bin * T_overlap from singles rates
    far_lag_baseline, // mean of the outer 20% of bins
};

/// Histograms all pairwise differences t1 - t2 with |lag| <= max_lag via a
/// two-pointer sweep and normalizes so uncorrelated streams give 1.
CorrelationFunction coincidence_histogram(const PhotonStream& s1, const PhotonStream& s2,
                                          double bin, double max_lag,
                                          CoincidenceNorm norm = CoincidenceNorm::accidental_rate);

struct TailMetrics {
    double kl_divergence = 0.0;
    bool kl_infinite = false;
    double chi_square = 0.0;
    std::size_t chi_square_cells = 0;
    std::map<int, double> tail_ratio; // P_emp(n >= k) / P_ref(n >= k), k in {3,4,5,6}
    std::map<int, double> tail_sigma; // binomial significance of the excess
};

/// Divergence of the empirical distribution from a reference pmf evaluated at
/// the empirical mean.
TailMetrics tail_metrics(const CountHistogram& hist,
                         const std::function<double(double, std::uint64_t)>& reference_pmf);

} // namespace sbl
