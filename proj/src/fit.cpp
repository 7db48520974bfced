#include "sbl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sbl {

namespace {

constexpr int kMaxIterations = 500;

using Matrix = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_linear(Matrix a, std::vector<double> rhs, std::vector<double>& x) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / a[i][i];
    return true;
}

bool invert(const Matrix& a, Matrix& inv) {
    const std::size_t n = a.size();
    inv.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(n, 0.0), x;
        e[c] = 1.0;
        if (!solve_linear(a, e, x)) return false;
        for (std::size_t r = 0; r < n; ++r) inv[r][c] = x[r];
    }
    return true;
}

struct Packed {
    // active parameters: [a,] b, log tau_m, log tau_g
    std::vector<double> p;
    bool fix_a;
    double fixed_a;

    double a() const { return fix_a ? fixed_a : p[0]; }
    double b() const { return p[fix_a ? 0 : 1]; }
    double log_tau_m() const { return p[fix_a ? 1 : 2]; }
    double log_tau_g() const { return p[fix_a ? 2 : 3]; }
};

double model_value(const FitModel& m, const Packed& q, double lag, std::vector<double>* grad) {
    const double tau_m = std::exp(q.log_tau_m());
    const double tau_g = std::exp(q.log_tau_g());
    const double xm = lag / tau_m;
    const double xg = lag / tau_g;
    const double em = std::exp(-m.mod_exponent * xm * xm);
    const double eg = std::exp(-m.speckle_exponent * xg * xg);
    const double fm = 1.0 + q.a() * em;
    const double fg = 1.0 + q.b() * eg;
    if (grad) {
        grad->clear();
        if (!q.fix_a) grad->push_back(em * fg);                                      // d/da
        grad->push_back(fm * eg);                                                    // d/db
        grad->push_back(q.a() * em * 2.0 * m.mod_exponent * xm * xm * fg);           // d/dlog tau_m
        grad->push_back(q.b() * eg * 2.0 * m.speckle_exponent * xg * xg * fm);       // d/dlog tau_g
    }
    return fm * fg;
}

double chi_square(const FitModel& m, const Packed& q, const CorrelationFunction& cf,
                  const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < cf.lags.size(); ++i) {
        const double r = cf.values[i] - model_value(m, q, cf.lags[i], nullptr);
        acc += w[i] * r * r;
    }
    return acc;
}

} // namespace

double eval_fit_model(const FitModel& model, const FitResult& p, double lag) {
    Packed q{{p.a, p.b, std::log(p.tau_m), std::log(p.tau_g)}, false, 0.0};
    return model_value(model, q, lag, nullptr);
}

FitResult fit_two_timescale(const CorrelationFunction& cf, const FitResult& init,
                            const FitModel& model, bool fix_a) {
    const std::size_t nbins = cf.lags.size();
    if (nbins < 20) throw std::invalid_argument("fit_two_timescale: need at least 20 bins");
    if (!(init.tau_m > 0.0 && init.tau_g > 0.0))
        throw std::invalid_argument("fit_two_timescale: initial timescales must be > 0");
    if (init.a < 0.0 || init.b < 0.0)
        throw std::invalid_argument("fit_two_timescale: initial contrasts must be >= 0");

    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (double v : cf.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (!(vmax - vmin > 1e-9 * std::max(1.0, std::abs(vmax))))
        throw std::domain_error("fit_two_timescale: degenerate flat correlation function");

    std::vector<double> w(nbins);
    for (std::size_t i = 0; i < nbins; ++i) {
        const double s = cf.stderrs[i];
        w[i] = (s > 0.0) ? 1.0 / (s * s) : 1.0;
    }

    Packed q;
    q.fix_a = fix_a;
    q.fixed_a = init.a;
    if (fix_a)
        q.p = {init.b, std::log(init.tau_m), std::log(init.tau_g)};
    else
        q.p = {init.a, init.b, std::log(init.tau_m), std::log(init.tau_g)};
    const std::size_t k = q.p.size();

    double chi2 = chi_square(model, q, cf, w);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;

    std::vector<double> grad;
    for (; iter < kMaxIterations && !converged; ++iter) {
        Matrix jtj(k, std::vector<double>(k, 0.0));
        std::vector<double> jtr(k, 0.0);
        for (std::size_t i = 0; i < nbins; ++i) {
            const double mv = model_value(model, q, cf.lags[i], &grad);
            const double r = cf.values[i] - mv;
            for (std::size_t u = 0; u < k; ++u) {
                jtr[u] += w[i] * grad[u] * r;
                for (std::size_t v = u; v < k; ++v) jtj[u][v] += w[i] * grad[u] * grad[v];
            }
        }
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < u; ++v) jtj[u][v] = jtj[v][u];

        bool accepted = false;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Matrix damped = jtj;
            for (std::size_t u = 0; u < k; ++u)
                damped[u][u] += lambda * std::max(jtj[u][u], 1e-12);
            std::vector<double> step;
            if (!solve_linear(damped, jtr, step)) {
                lambda *= 10.0;
                continue;
            }
            Packed trial = q;
            for (std::size_t u = 0; u < k; ++u) trial.p[u] += step[u];
            // contrasts stay nonnegative; log-timescales stay bounded
            const std::size_t contrasts = fix_a ? 1 : 2;
            for (std::size_t u = 0; u < contrasts; ++u) trial.p[u] = std::max(trial.p[u], 0.0);
            for (std::size_t u = contrasts; u < k; ++u)
                trial.p[u] = std::clamp(trial.p[u], -80.0, 80.0);

            const double trial_chi2 = chi_square(model, trial, cf, w);
            if (trial_chi2 <= chi2) {
                double max_step = 0.0;
                for (std::size_t u = 0; u < k; ++u)
                    max_step = std::max(max_step, std::abs(trial.p[u] - q.p[u]));
                const double improvement = chi2 - trial_chi2;
                q = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                if (max_step < 1e-12 || improvement < 1e-14 * std::max(chi2, 1e-300))
                    converged = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) converged = true; // no decreasing step found: local minimum
    }
    if (!converged)
        throw std::runtime_error("fit_two_timescale: no convergence after max iterations");

    // Covariance from the undamped normal equations at the optimum.
    Matrix jtj(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < nbins; ++i) {
        model_value(model, q, cf.lags[i], &grad);
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = u; v < k; ++v) jtj[u][v] += w[i] * grad[u] * grad[v];
    }
    for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < u; ++v) jtj[u][v] = jtj[v][u];

    // A pinned contrast of zero makes its timescale gradient vanish; invert
    // only the non-degenerate block and flag the inert parameters.
    std::vector<std::size_t> active;
    std::vector<bool> inert(k, true);
    for (std::size_t u = 0; u < k; ++u)
        if (jtj[u][u] > 0.0) {
            inert[u] = false;
            active.push_back(u);
        }
    Matrix sub(active.size(), std::vector<double>(active.size()));
    for (std::size_t u = 0; u < active.size(); ++u)
        for (std::size_t v = 0; v < active.size(); ++v) sub[u][v] = jtj[active[u]][active[v]];
    Matrix subinv;
    const bool have_cov = !active.empty() && invert(sub, subinv);
    Matrix cov(k, std::vector<double>(k, 0.0));
    if (have_cov)
        for (std::size_t u = 0; u < active.size(); ++u)
            for (std::size_t v = 0; v < active.size(); ++v)
                cov[active[u]][active[v]] = subinv[u][v];
    const double inf = std::numeric_limits<double>::infinity();

    FitResult out;
    out.a = q.a();
    out.b = q.b();
    out.tau_m = std::exp(q.log_tau_m());
    out.tau_g = std::exp(q.log_tau_g());
    out.residual_norm = std::sqrt(chi2);
    out.iterations = iter;
    out.converged = true;

    auto var_at = [&](std::size_t u) {
        if (!have_cov || inert[u]) return inf;
        const double v = cov[u][u];
        return v >= 0.0 ? v : inf;
    };
    std::size_t idx = 0;
    if (!fix_a) out.a_err = std::sqrt(var_at(idx++));
    out.b_err = std::sqrt(var_at(idx));
    const std::size_t ib = idx++;
    out.tau_m_err = out.tau_m * std::sqrt(var_at(idx++));
    out.tau_g_err = out.tau_g * std::sqrt(var_at(idx));
    const std::size_t ig = idx;

    out.g2_zero = (1.0 + out.a) * (1.0 + out.b);
    if (have_cov) {
        // delta method over (a, b)
        const double da = 1.0 + out.b;
        const double db = 1.0 + out.a;
        double v = db * db * cov[ib][ib];
        if (!fix_a) v += da * da * cov[0][0] + 2.0 * da * db * cov[0][ib];
        out.g2_zero_err = v >= 0.0 ? std::sqrt(v) : inf;
    } else {
        out.g2_zero_err = inf;
    }
    (void)ig;

    if (have_cov) {
        // Expand to full (a, b, tau_m, tau_g) order, undoing the log scaling.
        out.covariance.assign(4, std::vector<double>(4, 0.0));
        std::vector<std::size_t> map;
        if (!fix_a) map.push_back(0);
        map.push_back(1);
        map.push_back(2);
        map.push_back(3);
        const double scale[4] = {1.0, 1.0, out.tau_m, out.tau_g};
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < k; ++v)
                out.covariance[map[u]][map[v]] = scale[map[u]] * scale[map[v]] * cov[u][v];
    }

    if (!fix_a && model.mod_exponent == model.speckle_exponent && out.tau_m > out.tau_g) {
        std::swap(out.a, out.b);
        std::swap(out.a_err, out.b_err);
        std::swap(out.tau_m, out.tau_g);
        std::swap(out.tau_m_err, out.tau_g_err);
        if (!out.covariance.empty()) {
            auto& m = out.covariance;
            for (auto& row : m) {
                std::swap(row[0], row[1]);
                std::swap(row[2], row[3]);
            }
            std::swap(m[0], m[1]);
            std::swap(m[2], m[3]);
        }
    }
    return out;
}

} // namespace sbl
