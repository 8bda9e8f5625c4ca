#pragma once

// Estimation on daily log-asset-return windows: Gaussian and q-Gaussian
// maximum likelihood, rolling-window parameter tracks, autocorrelation of
// (transformed) returns, Kolmogorov-Smirnov and Pearson chi-square tests, and
// Q-Q quantile pairs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qgdefault/dist.hpp"
#include "qgdefault/market.hpp"
#include "qgdefault/numeric.hpp"
#include "qgdefault/specfun.hpp"

namespace qgd {

/// A fitted one-day return law: q-Gaussian (q == 1 for Gaussian) about `center`.
struct ReturnLaw {
    double center;
    QGaussianParams params;
};

struct FitResult {
    QGaussianParams params{1.0, 1.0};  // q == 1 for Gaussian fits, beta_tilde is then the precision
    double center = 0.0;
    double log_likelihood = 0.0;
    std::size_t n = 0;
    bool converged = false;
    bool boundary_hit = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::optional<Date> window_end_date;
    std::string diagnostics;

    [[nodiscard]] ReturnLaw law() const { return {center, params}; }
    [[nodiscard]] GaussianLaw gaussian() const { return {center, params.beta_tilde}; }
};

namespace detail {

inline void require_finite_sample(std::span<const double> v, const char* fn) {
    for (double x : v) {
        if (!std::isfinite(x)) throw std::domain_error(std::string(fn) + ": non-finite observation");
    }
}

// Returns below this standard deviation (log units) are treated as constant.
inline constexpr double kDegenerateScale = 1e-12;

}  // namespace detail

inline double law_cdf(const ReturnLaw& law, double x) { return qgaussian_cdf(law.params, x, law.center, 1.0); }

inline double law_log_pdf(const ReturnLaw& law, double x) { return qgaussian_log_pdf(law.params, x, law.center, 1.0); }

/// Quantile by bisection of the law's CDF, to 1e-10 in x.
inline double law_quantile(const ReturnLaw& law, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("law_quantile: p must lie in (0, 1)");
    if (p == 0.5) return law.center;
    const double scale = 1.0 / std::sqrt(law.params.beta_tilde);
    double w = scale;
    auto f = [&](double x) { return law_cdf(law, x) - p; };
    double lo = law.center - w;
    double hi = law.center + w;
    while (f(lo) > 0.0) {
        w *= 2.0;
        lo = law.center - w;
        if (!std::isfinite(lo)) throw std::runtime_error("law_quantile: bracket overflow");
    }
    w = scale;
    while (f(hi) < 0.0) {
        w *= 2.0;
        hi = law.center + w;
        if (!std::isfinite(hi)) throw std::runtime_error("law_quantile: bracket overflow");
    }
    return numeric::bisect(f, lo, hi, std::fmin(1e-10, 1e-10 * scale));
}

inline double log_likelihood(const ReturnLaw& law, std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += law_log_pdf(law, x);
    return s;
}

/// Closed-form Gaussian MLE: sample mean and the inverse of the biased variance.
inline FitResult fit_gaussian_mle(std::span<const double> v) {
    if (v.size() < 30) throw std::invalid_argument("fit_gaussian_mle: need at least 30 observations");
    detail::require_finite_sample(v, "fit_gaussian_mle");
    const double m = numeric::mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(v.size());
    if (!(std::sqrt(var) > detail::kDegenerateScale)) throw std::domain_error("fit_gaussian_mle: zero variance");
    FitResult r;
    r.params = {1.0, 1.0 / var};
    r.center = m;
    r.n = v.size();
    r.log_likelihood = log_likelihood(r.law(), v);
    r.converged = true;
    return r;
}

struct QFitOptions {
    double gradient_tol = 1e-8;
    int max_iter = 300;
    double boundary_delta = 1e-4;
};

namespace detail {

// Transformed coordinates: q = 1 + 2 / (1 + exp(-u)), beta_tilde = exp(w),
// location = c * unit, where unit is a fixed scale chosen at the start.
struct QFitPoint {
    double u;
    double w;
    double c;
};

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

inline QGaussianParams to_params(const QFitPoint& p) { return {1.0 + 2.0 * logistic(p.u), std::exp(p.w)}; }

inline QFitPoint to_point(const QGaussianParams& p, double c) {
    const double s = std::clamp((p.q - 1.0) / 2.0, 1e-12, 1.0 - 1e-12);
    return {std::log(s / (1.0 - s)), std::log(p.beta_tilde), c};
}

struct Objective {
    double value;
    std::array<double, 3> grad;
};

// Log-likelihood of v under the q-Gaussian (t = 1) located at pt.c * unit,
// with its analytic gradient in (u, w, c).
inline Objective qgaussian_objective(std::span<const double> v, const QFitPoint& pt, double unit) {
    const double sig = logistic(pt.u);
    double k = 2.0 * sig;
    if (k <= 0.0) k = std::numeric_limits<double>::min();
    const double bt = std::exp(pt.w);
    const double center = pt.c * unit;
    const double n = static_cast<double>(v.size());
    const double a = 1.0 / k - 0.5;
    const double log_cq = specfun::log_beta(0.5, a) - 0.5 * std::log(k);

    double sum_log = 0.0;    // sum log1p(k s)/k
    double sum_ratio = 0.0;  // sum s/(1 + k s)
    double sum_dk = 0.0;     // sum d/dk [log1p(k s)/k]
    double sum_dc = 0.0;     // sum beta_tilde y/(1 + k s)
    for (double vi : v) {
        const double y = vi - center;
        const double s = 0.5 * bt * y * y;
        const double ks = k * s;
        double lk;
        double dlk;
        if (ks < 1e-4) {
            // series in ks avoids cancellation
            lk = s * (1.0 - ks / 2.0 + ks * ks / 3.0 - ks * ks * ks / 4.0);
            dlk = s * s * (-0.5 + 2.0 * ks / 3.0 - 0.75 * ks * ks + 0.8 * ks * ks * ks);
        } else {
            const double l1p = std::log1p(ks);
            lk = l1p / k;
            dlk = s / (k * (1.0 + ks)) - l1p / (k * k);
        }
        sum_log += lk;
        sum_ratio += s / (1.0 + ks);
        sum_dk += dlk;
        sum_dc += bt * y / (1.0 + ks);
    }
    Objective o{};
    o.value = n * (-log_cq + 0.5 * std::log(0.5 * bt)) - sum_log;
    // d log C_q / dk = [psi(a+1/2) - psi(a)] / k^2 - 1/(2k)
    // (Taylor series near q = 1, where the two terms cancel)
    const double dlogc_dk = k < 1e-3
                                ? 0.375 + k * (0.25 + k * (0.140625 + k * (0.0625 + k * 0.0234375)))
                                : specfun::digamma_diff(a, 0.5) / (k * k) - 0.5 / k;
    o.grad[0] = (-n * dlogc_dk - sum_dk) * 2.0 * sig * (1.0 - sig);
    o.grad[1] = 0.5 * n - sum_ratio;
    o.grad[2] = sum_dc * unit;
    return o;
}

inline double norm(const std::array<double, 3>& g) { return std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]); }

// Solves (-H) s = g by Cholesky; false if -H is not positive definite.
inline bool newton_step(const std::array<std::array<double, 3>, 3>& H, const std::array<double, 3>& g,
                        std::array<double, 3>& s) {
    std::array<std::array<double, 3>, 3> L{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = -0.5 * (H[i][j] + H[j][i]);
            for (int k = 0; k < j; ++k) sum -= L[i][k] * L[j][k];
            if (i == j) {
                if (!(sum > 0.0)) return false;
                L[i][i] = std::sqrt(sum);
            } else {
                L[i][j] = sum / L[j][j];
            }
        }
    }
    std::array<double, 3> z{};
    for (int i = 0; i < 3; ++i) {
        double sum = g[i];
        for (int k = 0; k < i; ++k) sum -= L[i][k] * z[k];
        z[i] = sum / L[i][i];
    }
    for (int i = 2; i >= 0; --i) {
        double sum = z[i];
        for (int k = i + 1; k < 3; ++k) sum -= L[k][i] * s[k];
        s[i] = sum / L[i][i];
    }
    return true;
}

inline double excess_kurtosis(std::span<const double> y) {
    const double m = numeric::mean(y);
    double m2 = 0.0, m4 = 0.0;
    for (double x : y) {
        const double d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= static_cast<double>(y.size());
    m4 /= static_cast<double>(y.size());
    return m4 / (m2 * m2) - 3.0;
}

}  // namespace detail

/// Method-of-moments start: q from the Student-t kurtosis 6/(nu-4) when the
/// sample excess kurtosis is in (0, 12], else q = 1.5; beta_tilde matched to
/// the interquartile range.
inline QGaussianParams qgaussian_initial_guess(std::span<const double> v) {
    if (v.size() < 4) throw std::invalid_argument("qgaussian_initial_guess: too few observations");
    const double kurt = detail::excess_kurtosis(v);
    double q = 1.5;
    if (std::isfinite(kurt) && kurt > 0.0 && kurt <= 12.0) {
        const double nu = 4.0 + 6.0 / kurt;
        q = std::max(1.001, (nu + 3.0) / (nu + 1.0));
    }
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double iqr = numeric::sorted_quantile(s, 0.75) - numeric::sorted_quantile(s, 0.25);
    if (!(iqr > 0.0)) throw std::domain_error("qgaussian_initial_guess: zero interquartile range");
    const double std_iqr = 2.0 * law_quantile({0.0, {q, 1.0}}, 0.75);
    return {q, (std_iqr / iqr) * (std_iqr / iqr)};
}

/// q-Gaussian MLE of (q, beta_tilde, location), starting from the sample
/// median. Damped Newton ascent in transformed coordinates with an analytic
/// gradient and a finite-difference Hessian; converged when the gradient norm
/// falls below options.gradient_tol. The Gaussian fit is the q -> 1 edge of
/// this family, so a converged fit never has a lower likelihood than it.
inline FitResult fit_qgaussian_mle(std::span<const double> v, std::optional<QGaussianParams> init = std::nullopt,
                                   const QFitOptions& opt = {}) {
    if (v.size() < 100) throw std::invalid_argument("fit_qgaussian_mle: need at least 100 observations");
    detail::require_finite_sample(v, "fit_qgaussian_mle");
    const double med = numeric::median(v);
    double ss = 0.0;
    for (double x : v) ss += (x - med) * (x - med);
    const double rms = std::sqrt(ss / static_cast<double>(v.size()));
    if (!(rms > detail::kDegenerateScale)) throw std::domain_error("fit_qgaussian_mle: zero variance");
    const double unit = rms;

    FitResult r;
    r.n = v.size();
    auto valid_init = [](const std::optional<QGaussianParams>& p) {
        return p && p->q > 1.0 && p->q < 3.0 && p->beta_tilde > 0.0 && std::isfinite(p->beta_tilde);
    };
    QGaussianParams start = valid_init(init) ? *init : qgaussian_initial_guess(v);
    start.q = std::max(start.q, 1.01);  // a start at q = 1 would have to climb off the floor
    detail::QFitPoint pt = detail::to_point(start, med / unit);
    detail::Objective cur = detail::qgaussian_objective(v, pt, unit);
    if (!std::isfinite(cur.value)) {
        pt = detail::to_point(qgaussian_initial_guess(v), med / unit);
        cur = detail::qgaussian_objective(v, pt, unit);
    }

    auto coord = [](detail::QFitPoint& p, int j) -> double& { return j == 0 ? p.u : (j == 1 ? p.w : p.c); };
    // q - 1 = 2 logistic(u) is about 1e-17 at the floor, where the fit is
    // Gaussian to working precision.
    const double u_floor = -40.0;
    const double u_near = std::log(0.5 * opt.boundary_delta);
    // gradient norm with the q component dropped while pinned at the floor
    auto pnorm = [&](const detail::QFitPoint& p, std::array<double, 3> g) {
        if (p.u <= u_floor && g[0] <= 0.0) g[0] = 0.0;
        return detail::norm(g);
    };
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (pnorm(pt, cur.grad) < opt.gradient_tol) break;
        if (pt.u < u_near && pt.u > u_floor && cur.grad[0] < 0.0) {
            // Newton creeps toward q = 1 about half a unit of u per step. Jump to the
            // floor when it is better and the likelihood still falls with q there.
            const detail::QFitPoint edge{u_floor, pt.w, pt.c};
            const detail::Objective e = detail::qgaussian_objective(v, edge, unit);
            if (std::isfinite(e.value) && e.value >= cur.value && e.grad[0] <= 0.0) {
                pt = edge;
                cur = e;
                continue;
            }
        }
        std::array<std::array<double, 3>, 3> H{};
        for (int j = 0; j < 3; ++j) {
            detail::QFitPoint p1 = pt;
            const double h = 1e-6 * std::max(1.0, std::fabs(coord(pt, j)));
            coord(p1, j) += h;
            const auto g1 = detail::qgaussian_objective(v, p1, unit).grad;
            for (int i = 0; i < 3; ++i) H[i][j] = (g1[i] - cur.grad[i]) / h;
        }
        std::array<double, 3> g = cur.grad;
        if (pt.u <= u_floor && g[0] <= 0.0) {
            // q pinned at the floor: optimize the other two coordinates only
            for (int i = 0; i < 3; ++i) H[0][i] = H[i][0] = 0.0;
            H[0][0] = -1.0;
            g[0] = 0.0;
        }
        std::array<double, 3> step{};
        if (!detail::newton_step(H, g, step)) {
            // not concave here: shift the spectrum until it is (Levenberg-Marquardt)
            double scale = 0.0;
            for (int i = 0; i < 3; ++i) scale = std::max(scale, std::fabs(H[i][i]));
            for (double lambda = 1e-8 * std::max(scale, 1.0);; lambda *= 10.0) {
                auto Hs = H;
                for (int i = 0; i < 3; ++i) Hs[i][i] -= lambda;
                if (detail::newton_step(Hs, g, step)) break;
            }
        }
        const double len = std::sqrt(step[0] * step[0] + step[1] * step[1] + step[2] * step[2]);
        if (len > 2.0) {
            for (double& s : step) s *= 2.0 / len;
        }
        const double slope = g[0] * step[0] + g[1] * step[1] + g[2] * step[2];
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(cur.value);
        const double gnorm = pnorm(pt, cur.grad);
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const detail::QFitPoint trial{std::max(u_floor, pt.u + alpha * step[0]), pt.w + alpha * step[1],
                                          pt.c + alpha * step[2]};
            const detail::Objective cand = detail::qgaussian_objective(v, trial, unit);
            if (std::isfinite(cand.value)) {
                const bool armijo = cand.value >= cur.value + 1e-4 * alpha * slope;
                // near the optimum value changes drop below rounding; the gradient decides
                const bool flat = std::fabs(cand.value - cur.value) <= noise && pnorm(trial, cand.grad) < gnorm;
                if (armijo || flat) {
                    pt = trial;
                    cur = cand;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!moved) {
            r.diagnostics = "line search failed";
            break;
        }
    }
    r.params = detail::to_params(pt);
    r.center = pt.c * unit;
    r.log_likelihood = cur.value;
    r.iterations = it;
    r.gradient_norm = pnorm(pt, cur.grad);
    r.converged = std::isfinite(cur.value) && r.gradient_norm < opt.gradient_tol;
    r.boundary_hit = r.params.q - 1.0 < opt.boundary_delta || 3.0 - r.params.q < opt.boundary_delta;
    if (!r.converged && r.diagnostics.empty()) r.diagnostics = "iteration limit reached";
    return r;
}

/// Fits each window of `window` returns ending at index e = window, window + step, ...
/// (inclusive of the return at e), yielding size() - window fits at step 1.
/// A window whose fit throws is skipped.
inline std::vector<FitResult> rolling_fit(const ReturnSeries& r, std::size_t window = 250, std::size_t step = 1,
                                          bool warm_start = true, const QFitOptions& opt = {}) {
    if (window < 100) throw std::invalid_argument("rolling_fit: window must be at least 100");
    if (step == 0) throw std::invalid_argument("rolling_fit: step must be positive");
    if (r.size() < window + 1) throw std::invalid_argument("rolling_fit: series shorter than window + 1");
    std::vector<FitResult> out;
    std::optional<QGaussianParams> prev;
    const std::span<const double> all(r.v);
    for (std::size_t e = window; e < r.size(); e += step) {
        try {
            FitResult f = fit_qgaussian_mle(all.subspan(e + 1 - window, window), warm_start ? prev : std::nullopt, opt);
            f.window_end_date = r.dates[e];
            if (f.converged) prev = f.params;
            out.push_back(std::move(f));
        } catch (const std::exception&) {
            // gap
        }
    }
    return out;
}

enum class AcfTransform { AbsReturn, SquaredReturn, RawReturn };

inline const char* to_string(AcfTransform t) {
    switch (t) {
        case AcfTransform::AbsReturn: return "abs";
        case AcfTransform::SquaredReturn: return "squared";
        case AcfTransform::RawReturn: return "raw";
    }
    return "unknown";
}

struct AcfResult {
    std::vector<int> lags;
    std::vector<double> values;
    AcfTransform transform;
};

/// ACF(h) = sum_{i=1}^{N-h} (x_i - m)(x_{i+h} - m) / sum_i (x_i - m)^2 with one
/// full-sample mean m and the full-sample denominator.
inline AcfResult acf(std::span<const double> v, AcfTransform transform, int h_max) {
    const std::size_t N = v.size();
    if (h_max < 0 || 2 * static_cast<std::size_t>(h_max) >= N) {
        throw std::invalid_argument("acf: h_max must be below N/2");
    }
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i) {
        switch (transform) {
            case AcfTransform::AbsReturn: x[i] = std::fabs(v[i]); break;
            case AcfTransform::SquaredReturn: x[i] = v[i] * v[i]; break;
            case AcfTransform::RawReturn: x[i] = v[i]; break;
        }
    }
    const double m = numeric::mean(x);
    double den = 0.0;
    for (double xi : x) den += (xi - m) * (xi - m);
    if (!(den > 0.0)) throw std::domain_error("acf: zero-variance series");
    AcfResult res{{}, {}, transform};
    res.lags.reserve(static_cast<std::size_t>(h_max) + 1);
    res.values.reserve(static_cast<std::size_t>(h_max) + 1);
    for (int h = 0; h <= h_max; ++h) {
        const auto uh = static_cast<std::size_t>(h);
        double num = 0.0;
        for (std::size_t i = 0; i + uh < N; ++i) num += (x[i] - m) * (x[i + uh] - m);
        res.lags.push_back(h);
        res.values.push_back(h == 0 ? 1.0 : num / den);
    }
    return res;
}

struct TestResult {
    double statistic;
    double p_value;
    int dof = 0;  // chi-square only
};

/// One-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value
/// (Stephens' small-sample correction of the argument).
inline TestResult ks_test(std::span<const double> v, const ReturnLaw& law) {
    if (v.size() < 30) throw std::invalid_argument("ks_test: need at least 30 observations");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double F = law_cdf(law, s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, specfun::kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d), 0};
}

/// Pearson chi-square over `bins` equal-probability bins of the law, with
/// bins - 1 - fitted_params degrees of freedom.
inline TestResult chi2_test(std::span<const double> v, const ReturnLaw& law, int bins, int fitted_params = 2) {
    if (bins < 2) throw std::invalid_argument("chi2_test: need at least 2 bins");
    const double n = static_cast<double>(v.size());
    const double expected = n / bins;
    if (expected < 5.0) throw std::invalid_argument("chi2_test: fewer than 5 expected counts per bin");
    const int dof = bins - 1 - fitted_params;
    if (dof < 1) throw std::invalid_argument("chi2_test: no degrees of freedom left");
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double x : v) {
        const double F = law_cdf(law, x);
        auto b = static_cast<int>(std::floor(F * bins));
        b = std::clamp(b, 0, bins - 1);
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    return {stat, specfun::reg_upper_gamma(0.5 * dof, 0.5 * stat), dof};
}

struct QQPoint {
    double theoretical;
    double empirical;
};

/// Q-Q pairs at plotting positions i/(n+1).
inline std::vector<QQPoint> qq_pairs(std::span<const double> v, const ReturnLaw& law) {
    if (v.size() < 10) throw std::invalid_argument("qq_pairs: need at least 10 observations");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    std::vector<QQPoint> out(s.size());
    const double n1 = static_cast<double>(s.size()) + 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = {law_quantile(law, static_cast<double>(i + 1) / n1), s[i]};
    }
    return out;
}

}  // namespace qgd
