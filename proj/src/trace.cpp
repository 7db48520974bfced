#include "sbl/trace.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace sbl {

IntensityTrace::IntensityTrace(double dt, std::vector<double> samples, double origin)
    : dt_(dt), origin_(origin), samples_(std::move(samples)) {
    if (!(dt_ > 0.0)) throw std::invalid_argument("IntensityTrace: dt must be > 0");
    if (samples_.empty()) throw std::invalid_argument("IntensityTrace: need at least one sample");
    for (double s : samples_) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw std::invalid_argument("IntensityTrace: samples must be finite and >= 0");
    }
}

double IntensityTrace::at_time(double t) const {
    const double x = (t - origin_) / dt_;
    if (x < 0.0) return 0.0;
    const auto i = static_cast<std::size_t>(x);
    if (i >= samples_.size()) return 0.0;
    return samples_[i];
}

double IntensityTrace::mean() const {
    double acc = 0.0;
    for (double s : samples_) acc += s;
    return acc / static_cast<double>(samples_.size());
}

double IntensityTrace::sample_g2_zero() const {
    double m1 = 0.0, m2 = 0.0;
    for (double s : samples_) {
        m1 += s;
        m2 += s * s;
    }
    const auto n = static_cast<double>(samples_.size());
    m1 /= n;
    m2 /= n;
    if (m1 <= 0.0) throw std::domain_error("sample_g2_zero: zero mean intensity");
    return m2 / (m1 * m1);
}

double IntensityTrace::normalized_autocovariance(std::size_t lag) const {
    if (lag >= samples_.size())
        throw std::invalid_argument("normalized_autocovariance: lag beyond trace length");
    const double mu = mean();
    double c0 = 0.0;
    for (double s : samples_) c0 += (s - mu) * (s - mu);
    c0 /= static_cast<double>(samples_.size());
    if (c0 <= 0.0) throw std::domain_error("normalized_autocovariance: zero variance");
    double cl = 0.0;
    const std::size_t n = samples_.size() - lag;
    for (std::size_t i = 0; i < n; ++i) cl += (samples_[i] - mu) * (samples_[i + lag] - mu);
    cl /= static_cast<double>(n);
    return cl / c0;
}

FieldTrace::FieldTrace(double dt, std::vector<std::complex<double>> samples, double origin)
    : dt_(dt), origin_(origin), samples_(std::move(samples)) {
    if (!(dt_ > 0.0)) throw std::invalid_argument("FieldTrace: dt must be > 0");
    if (samples_.empty()) throw std::invalid_argument("FieldTrace: need at least one sample");
}

IntensityTrace FieldTrace::intensity() const {
    std::vector<double> out(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) out[i] = std::norm(samples_[i]);
    return IntensityTrace(dt_, std::move(out), origin_);
}

IntensityTrace multiply_traces(const IntensityTrace& a, const IntensityTrace& b) {
    if (a.dt() != b.dt() || a.size() != b.size())
        throw std::invalid_argument("multiply_traces: traces must share dt and length");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return IntensityTrace(a.dt(), std::move(out), a.origin());
}

IntensityTrace rescale_to_mean(const IntensityTrace& trace, double target_mean) {
    if (!(target_mean >= 0.0)) throw std::invalid_argument("rescale_to_mean: target must be >= 0");
    const double mu = trace.mean();
    if (mu == 0.0) {
        if (target_mean == 0.0) return trace;
        throw std::domain_error("rescale_to_mean: cannot rescale an all-zero trace");
    }
    const double k = target_mean / mu;
    std::vector<double> out(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) out[i] = trace[i] * k;
    return IntensityTrace(trace.dt(), std::move(out), trace.origin());
}

} // namespace sbl
