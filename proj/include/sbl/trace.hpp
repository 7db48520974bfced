#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sbl {

/// Uniformly sampled nonnegative intensity record, in photons/second.
/// The trace is treated as piecewise constant over each sample interval.
class IntensityTrace {
public:
    IntensityTrace(double dt, std::vector<double> samples, double origin = 0.0);

    double dt() const { return dt_; }
    double origin() const { return origin_; }
    double duration() const { return dt_ * static_cast<double>(samples_.size()); }
    std::size_t size() const { return samples_.size(); }
    const std::vector<double>& samples() const { return samples_; }
    double operator[](std::size_t i) const { return samples_[i]; }

    /// Intensity at absolute time t (piecewise constant; 0 outside the span).
    double at_time(double t) const;

    double mean() const;
    /// Sample estimate of <I^2>/<I>^2, the zero-lag degree of second-order coherence.
    double sample_g2_zero() const;
    /// Normalized intensity autocovariance c(lag)/c(0) at an integer sample lag.
    double normalized_autocovariance(std::size_t lag) const;

private:
    double dt_;
    double origin_;
    std::vector<double> samples_;
};

/// Complex analytic field on a uniform grid; |E|^2 is the intensity.
class FieldTrace {
public:
    FieldTrace(double dt, std::vector<std::complex<double>> samples, double origin = 0.0);

    double dt() const { return dt_; }
    double origin() const { return origin_; }
    std::size_t size() const { return samples_.size(); }
    const std::vector<std::complex<double>>& samples() const { return samples_; }

    IntensityTrace intensity() const;

private:
    double dt_;
    double origin_;
    std::vector<std::complex<double>> samples_;
};

/// Pointwise product of two traces on identical grids.
IntensityTrace multiply_traces(const IntensityTrace& a, const IntensityTrace& b);

/// Rescale a trace so its sample mean equals target_mean. A zero trace is
/// returned unchanged when target_mean is 0, and rejected otherwise.
IntensityTrace rescale_to_mean(const IntensityTrace& trace, double target_mean);

} // namespace sbl
