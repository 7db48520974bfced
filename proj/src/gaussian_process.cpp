#include "sbl/gaussian_process.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

#include "sbl/rng.hpp"

namespace sbl {

namespace {

// FFTW's planner is not thread-safe; execution of a finished plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

} // namespace

double acf_value(AcfShape shape, double t, double corr_time) {
    const double x = t / corr_time;
    switch (shape) {
        case AcfShape::gaussian: return std::exp(-x * x);
        case AcfShape::exponential: return std::exp(-std::abs(x));
    }
    throw std::logic_error("acf_value: unknown shape");
}

std::vector<std::complex<double>> sample_circular_gaussian(std::size_t n, double dt,
                                                           AcfShape shape, double corr_time,
                                                           double variance, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_circular_gaussian: n must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("sample_circular_gaussian: dt must be > 0");
    if (!(corr_time > 0.0))
        throw std::invalid_argument("sample_circular_gaussian: corr_time must be > 0");
    if (!(variance >= 0.0))
        throw std::invalid_argument("sample_circular_gaussian: variance must be >= 0");

    if (variance == 0.0) return std::vector<std::complex<double>>(n, {0.0, 0.0});

    // The embedding ring must let the autocorrelation decay to ~0 at half the
    // ring, otherwise the circulant eigenvalues go significantly negative.
    const double decay_lags =
        (shape == AcfShape::gaussian ? 8.0 : 40.0) * corr_time / dt;
    const std::size_t m =
        next_pow2(std::max<std::size_t>(2 * n, 2 * static_cast<std::size_t>(decay_lags) + 2));

    std::vector<std::complex<double>> buf(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t d = std::min(j, m - j);
        buf[j] = {variance * acf_value(shape, static_cast<double>(d) * dt, corr_time), 0.0};
    }

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan); // buf now holds the circulant eigenvalues (real up to rounding)

    auto engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double inv_2m = 1.0 / (2.0 * static_cast<double>(m));
    for (std::size_t k = 0; k < m; ++k) {
        const double lambda = std::max(buf[k].real(), 0.0);
        const double s = std::sqrt(lambda * inv_2m);
        const double a = normal(engine);
        const double b = normal(engine);
        buf[k] = {s * a, s * b};
    }

    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }

    buf.resize(n);
    return buf;
}

} // namespace sbl
