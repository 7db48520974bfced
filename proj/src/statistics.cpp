#include "sbl/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sbl/rng.hpp"

namespace sbl {

CountHistogram::CountHistogram(double window_width, std::vector<std::uint64_t> counts_per_n)
    : window_width_(window_width), counts_per_n_(std::move(counts_per_n)) {
    if (!(window_width_ > 0.0))
        throw std::invalid_argument("CountHistogram: window_width must be > 0");
    if (counts_per_n_.empty()) counts_per_n_.push_back(0);
    n_windows_ = std::accumulate(counts_per_n_.begin(), counts_per_n_.end(), std::uint64_t{0});
    if (n_windows_ == 0) throw std::invalid_argument("CountHistogram: no windows");
}

double CountHistogram::probability(std::size_t n) const {
    if (n >= counts_per_n_.size()) return 0.0;
    return static_cast<double>(counts_per_n_[n]) / static_cast<double>(n_windows_);
}

double CountHistogram::mean() const {
    double acc = 0.0;
    for (std::size_t n = 0; n < counts_per_n_.size(); ++n)
        acc += static_cast<double>(n) * static_cast<double>(counts_per_n_[n]);
    return acc / static_cast<double>(n_windows_);
}

CountHistogram count_windows(const PhotonStream& stream, double window_width,
                             std::uint64_t n_windows, double stride) {
    if (!(window_width > 0.0)) throw std::invalid_argument("count_windows: window width must be > 0");
    if (n_windows == 0) throw std::invalid_argument("count_windows: need at least one window");
    if (stride == 0.0) stride = window_width;
    if (!(stride >= window_width))
        throw std::invalid_argument("count_windows: stride must be >= window width");

    const double start = stream.span_begin();
    const double needed =
        static_cast<double>(n_windows - 1) * stride + window_width;
    const double slack = 1e-9 * window_width;
    if (stream.span_end() - start + slack < needed)
        throw std::invalid_argument("count_windows: stream span shorter than n_windows * T");

    std::vector<std::uint64_t> per_window(n_windows, 0);
    for (double t : stream.timestamps()) {
        const double x = t - start;
        if (x < 0.0) continue;
        const auto w = static_cast<std::uint64_t>(x / stride);
        if (w >= n_windows) break;
        if (x - static_cast<double>(w) * stride < window_width) ++per_window[w];
    }

    std::uint64_t max_n = 0;
    for (auto c : per_window) max_n = std::max(max_n, c);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(max_n) + 1, 0);
    for (auto c : per_window) ++counts[static_cast<std::size_t>(c)];
    return CountHistogram(window_width, std::move(counts));
}

namespace {

// First and second factorial moments of the window counts.
void factorial_moments(const CountHistogram& hist, double& s1, double& s2) {
    s1 = 0.0;
    s2 = 0.0;
    const auto& c = hist.counts_per_n();
    const auto norm = static_cast<double>(hist.n_windows());
    for (std::size_t n = 0; n < c.size(); ++n) {
        const double p = static_cast<double>(c[n]) / norm;
        const auto dn = static_cast<double>(n);
        s1 += p * dn;
        s2 += p * dn * (dn - 1.0);
    }
}

} // namespace

ValueWithError g2_from_histogram(const CountHistogram& hist) {
    double s1 = 0.0, s2 = 0.0;
    factorial_moments(hist, s1, s2);
    if (s1 <= 0.0)
        throw std::domain_error("g2_from_histogram: undefined for zero mean photon number");
    const double g2 = s2 / (s1 * s1);

    // Delta method over the multinomial covariance of P(n):
    // Var(g2) = (1/N) [ sum P_n d_n^2 - (sum P_n d_n)^2 ],
    // d_n = dg2/dP_n = n(n-1)/s1^2 - 2 n s2 / s1^3.
    const auto& c = hist.counts_per_n();
    const auto norm = static_cast<double>(hist.n_windows());
    double ed = 0.0, ed2 = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (c[n] == 0) continue;
        const double p = static_cast<double>(c[n]) / norm;
        const auto dn = static_cast<double>(n);
        const double d = dn * (dn - 1.0) / (s1 * s1) - 2.0 * dn * s2 / (s1 * s1 * s1);
        ed += p * d;
        ed2 += p * d * d;
    }
    const double var = std::max(0.0, (ed2 - ed * ed) / norm);
    return {g2, std::sqrt(var)};
}

double g2_bootstrap_stderr(const CountHistogram& hist, std::size_t n_resamples,
                           std::uint64_t seed) {
    if (n_resamples < 2) throw std::invalid_argument("g2_bootstrap_stderr: need >= 2 resamples");
    auto engine = make_engine(seed);
    const auto& c = hist.counts_per_n();
    const std::uint64_t total = hist.n_windows();

    std::vector<double> estimates;
    estimates.reserve(n_resamples);
    std::vector<std::uint64_t> resampled(c.size());
    for (std::size_t r = 0; r < n_resamples; ++r) {
        // Multinomial draw via chained binomials over the (small) count support.
        std::uint64_t remaining = total;
        double mass = 1.0;
        for (std::size_t n = 0; n < c.size(); ++n) {
            const double p = static_cast<double>(c[n]) / static_cast<double>(total);
            std::uint64_t draw = 0;
            if (remaining > 0 && mass > 0.0) {
                std::binomial_distribution<std::uint64_t> bin(remaining,
                                                              std::min(1.0, p / mass));
                draw = bin(engine);
            }
            resampled[n] = draw;
            remaining -= draw;
            mass -= p;
        }
        try {
            estimates.push_back(
                g2_from_histogram(CountHistogram(hist.window_width(), resampled)).value);
        } catch (const std::domain_error&) {
            // all-zero resample; skip
        }
    }
    if (estimates.size() < 2) throw std::domain_error("g2_bootstrap_stderr: degenerate histogram");
    double mu = 0.0;
    for (double e : estimates) mu += e;
    mu /= static_cast<double>(estimates.size());
    double var = 0.0;
    for (double e : estimates) var += (e - mu) * (e - mu);
    var /= static_cast<double>(estimates.size() - 1);
    return std::sqrt(var);
}

double g2_of_pmf(const std::vector<double>& probs) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        const auto dn = static_cast<double>(n);
        s1 += probs[n] * dn;
        s2 += probs[n] * dn * (dn - 1.0);
    }
    if (s1 <= 0.0) throw std::domain_error("g2_of_pmf: undefined for zero mean");
    return s2 / (s1 * s1);
}

double geometric_pmf(double mean, std::uint64_t n) {
    if (!(mean >= 0.0)) throw std::invalid_argument("geometric_pmf: mean must be >= 0");
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    const auto dn = static_cast<double>(n);
    return std::exp(dn * std::log(mean / (1.0 + mean)) - std::log1p(mean));
}

double poisson_pmf(double mean, std::uint64_t n) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_pmf: mean must be >= 0");
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    const auto dn = static_cast<double>(n);
    return std::exp(-mean + dn * std::log(mean) - std::lgamma(dn + 1.0));
}

std::vector<double> truncated_pmf(const std::function<double(double, std::uint64_t)>& pmf,
                                  double mean, double tail_mass) {
    constexpr std::uint64_t kMaxSupport = 100000;
    std::vector<double> probs;
    double cum = 0.0;
    for (std::uint64_t n = 0; n <= kMaxSupport; ++n) {
        probs.push_back(pmf(mean, n));
        cum += probs.back();
        if (cum >= 1.0 - tail_mass) break;
    }
    for (double& p : probs) p /= cum;
    return probs;
}

CorrelationFunction coincidence_histogram(const PhotonStream& s1, const PhotonStream& s2,
                                          double bin, double max_lag, CoincidenceNorm norm) {
    if (!(bin > 0.0)) throw std::invalid_argument("coincidence_histogram: bin must be > 0");
    if (!(max_lag >= 10.0 * bin))
        throw std::invalid_argument("coincidence_histogram: max_lag must be >= 10 * bin");

    const double ov_begin = std::max(s1.span_begin(), s2.span_begin());
    const double ov_end = std::min(s1.span_end(), s2.span_end());
    if (!(ov_end > ov_begin))
        throw std::invalid_argument("coincidence_histogram: stream spans do not overlap");
    const double t_overlap = ov_end - ov_begin;

    const auto half = static_cast<std::size_t>(std::llround(std::ceil(max_lag / bin)));
    const std::size_t nbins = 2 * half;
    const double lag_limit = static_cast<double>(half) * bin;

    std::vector<std::uint64_t> counts(nbins, 0);
    const auto& t1s = s1.timestamps();
    const auto& t2s = s2.timestamps();
    std::size_t lo = 0;
    for (const double t1 : t1s) {
        while (lo < t2s.size() && t2s[lo] < t1 - lag_limit) ++lo;
        for (std::size_t j = lo; j < t2s.size() && t2s[j] <= t1 + lag_limit; ++j) {
            const double d = t1 - t2s[j];
            auto idx = static_cast<std::ptrdiff_t>(std::floor((d + lag_limit) / bin));
            if (idx < 0) idx = 0;
            if (idx >= static_cast<std::ptrdiff_t>(nbins)) idx = static_cast<std::ptrdiff_t>(nbins) - 1;
            ++counts[static_cast<std::size_t>(idx)];
        }
    }

    double denom = 0.0;
    if (norm == CoincidenceNorm::accidental_rate) {
        auto in_overlap = [&](const std::vector<double>& ts) {
            auto a = std::lower_bound(ts.begin(), ts.end(), ov_begin);
            auto b = std::upper_bound(ts.begin(), ts.end(), ov_end);
            return static_cast<double>(b - a);
        };
        const double r1 = in_overlap(t1s) / t_overlap;
        const double r2 = in_overlap(t2s) / t_overlap;
        denom = r1 * r2 * bin * t_overlap;
    } else {
        const std::size_t edge = std::max<std::size_t>(1, nbins / 10);
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < edge; ++i) acc += counts[i] + counts[nbins - 1 - i];
        denom = static_cast<double>(acc) / static_cast<double>(2 * edge);
    }
    if (!(denom > 0.0))
        throw std::domain_error("coincidence_histogram: zero normalization (empty streams?)");

    CorrelationFunction cf;
    cf.bin_width = bin;
    cf.lags.resize(nbins);
    cf.values.resize(nbins);
    cf.stderrs.resize(nbins);
    for (std::size_t i = 0; i < nbins; ++i) {
        cf.lags[i] = (static_cast<double>(i) + 0.5) * bin - lag_limit;
        cf.values[i] = static_cast<double>(counts[i]) / denom;
        cf.stderrs[i] = std::sqrt(static_cast<double>(std::max<std::uint64_t>(counts[i], 1))) / denom;
    }
    return cf;
}

TailMetrics tail_metrics(const CountHistogram& hist,
                         const std::function<double(double, std::uint64_t)>& reference_pmf) {
    const double mean = hist.mean();
    const auto& c = hist.counts_per_n();
    const auto total = static_cast<double>(hist.n_windows());

    TailMetrics out;
    std::vector<double> ref(c.size());
    double ref_cum = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        ref[n] = reference_pmf(mean, n);
        ref_cum += ref[n];
    }

    for (std::size_t n = 0; n < c.size(); ++n) {
        if (c[n] == 0) continue;
        const double p = static_cast<double>(c[n]) / total;
        if (ref[n] <= 0.0) {
            out.kl_infinite = true;
            out.kl_divergence = std::numeric_limits<double>::infinity();
        } else if (!out.kl_infinite) {
            out.kl_divergence += p * std::log(p / ref[n]);
        }
    }

    // Chi-square over the union support plus an overflow cell for the
    // reference mass beyond the observed maximum count.
    out.chi_square_cells = 0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        const double expected = total * ref[n];
        const auto observed = static_cast<double>(c[n]);
        if (expected <= 0.0) {
            if (observed > 0.0) out.chi_square = std::numeric_limits<double>::infinity();
            continue;
        }
        out.chi_square += (observed - expected) * (observed - expected) / expected;
        ++out.chi_square_cells;
    }
    const double overflow_expected = total * std::max(0.0, 1.0 - ref_cum);
    if (overflow_expected > 0.0) {
        out.chi_square += overflow_expected; // observed 0 in the overflow cell
        ++out.chi_square_cells;
    }

    for (int k : {3, 4, 5, 6}) {
        double emp_tail = 0.0;
        for (std::size_t n = static_cast<std::size_t>(k); n < c.size(); ++n)
            emp_tail += static_cast<double>(c[n]);
        double ref_tail = 1.0;
        for (int n = 0; n < k; ++n) ref_tail -= reference_pmf(mean, static_cast<std::uint64_t>(n));
        ref_tail = std::max(ref_tail, 0.0);
        if (ref_tail <= 0.0) {
            out.tail_ratio[k] = emp_tail > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
            out.tail_sigma[k] = emp_tail > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
            continue;
        }
        out.tail_ratio[k] = (emp_tail / total) / ref_tail;
        const double expected = total * ref_tail;
        out.tail_sigma[k] = (emp_tail - expected) / std::sqrt(expected * (1.0 - ref_tail));
    }
    return out;
}

} // namespace sbl
