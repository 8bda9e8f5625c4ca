#pragma once

// Gaussian, Gamma precision law, and the q-Gaussian with its three equivalent
// parameterizations: (q, beta_tilde), Gamma (a, b), and scaled Student-t (nu, s).
//
// Time is measured in trading days throughout; beta_tilde and the Gamma rate
// are per trading day.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "qgdefault/specfun.hpp"

namespace qgd {

inline constexpr double kTradingDaysPerYear = 250.0;

/// Gamma law of the return precision: shape a, rate b.
struct GammaParams {
    double a;
    double b;

    [[nodiscard]] double mean_precision() const { return a / b; }
};

/// q-Gaussian law of returns. q == 1 is the Gaussian case with precision beta_tilde.
struct QGaussianParams {
    double q;
    double beta_tilde;

    [[nodiscard]] bool is_gaussian() const { return q == 1.0; }
};

struct StudentParams {
    double nu;
    double s;
};

/// Gaussian return law: effective drift per day m = mu - sigma^2/2, precision 1/sigma^2.
struct GaussianLaw {
    double m;
    double beta;
};

inline void validate(const GammaParams& g) {
    if (!(g.a > 0.0) || !(g.b > 0.0) || !std::isfinite(g.a) || !std::isfinite(g.b)) {
        throw std::domain_error("GammaParams: shape and rate must be positive and finite");
    }
}

inline void validate(const QGaussianParams& p) {
    if (!(p.q >= 1.0 && p.q < 3.0)) throw std::domain_error("QGaussianParams: q must lie in [1, 3)");
    if (!(p.beta_tilde > 0.0) || !std::isfinite(p.beta_tilde)) {
        throw std::domain_error("QGaussianParams: beta_tilde must be positive and finite");
    }
}

inline void validate(const StudentParams& s) {
    if (!(s.nu > 0.0) || !(s.s > 0.0)) throw std::domain_error("StudentParams: nu and s must be positive");
}

inline QGaussianParams gamma_to_q(const GammaParams& g) {
    validate(g);
    return {(2.0 * g.a + 3.0) / (2.0 * g.a + 1.0), (2.0 * g.a + 1.0) / (2.0 * g.b)};
}

inline GammaParams q_to_gamma(const QGaussianParams& p) {
    validate(p);
    if (p.is_gaussian()) throw std::domain_error("q_to_gamma: q = 1 has no finite Gamma law");
    const double a = (3.0 - p.q) / (2.0 * (p.q - 1.0));
    return {a, (2.0 * a + 1.0) / (2.0 * p.beta_tilde)};
}

inline StudentParams student_equiv(const QGaussianParams& p) {
    const GammaParams g = q_to_gamma(p);
    return {2.0 * g.a, std::sqrt(g.b / g.a)};
}

inline QGaussianParams student_to_q(const StudentParams& s) {
    validate(s);
    return {(s.nu + 3.0) / (s.nu + 1.0), (s.nu + 1.0) / (s.nu * s.s * s.s)};
}

/// Gamma density f(beta) = b^a / Gamma(a) beta^(a-1) exp(-b beta). beta = 0 is
/// admitted as the boundary value.
inline double gamma_pdf(const GammaParams& g, double beta) {
    validate(g);
    if (!(beta >= 0.0)) throw std::domain_error("gamma_pdf: precision must be nonnegative");
    if (beta == 0.0) {
        if (g.a == 1.0) return g.b;
        return g.a > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::exp(g.a * std::log(g.b) - specfun::log_gamma(g.a) + (g.a - 1.0) * std::log(beta) - g.b * beta);
}

/// Gaussian Green function of the unbounded diffusion of ln V/D.
inline double gaussian_green(double beta, double m, double x, double x0, double t) {
    if (!(beta > 0.0)) throw std::domain_error("gaussian_green: precision must be positive");
    if (!(t > 0.0)) throw std::domain_error("gaussian_green: time must be positive");
    const double y = x - x0 - m * t;
    return std::sqrt(beta / (2.0 * specfun::kPi * t)) * std::exp(-beta * y * y / (2.0 * t));
}

inline double qgaussian_log_pdf(const QGaussianParams& p, double x, double x0, double t) {
    validate(p);
    if (!(t > 0.0)) throw std::domain_error("qgaussian_pdf: time must be positive");
    const double y = x - x0;
    const double u = p.beta_tilde * y * y / (2.0 * t);
    if (p.is_gaussian()) return 0.5 * std::log(p.beta_tilde / (2.0 * specfun::kPi * t)) - u;
    const double k = p.q - 1.0;
    return -std::log(specfun::c_q(p.q)) + 0.5 * std::log(p.beta_tilde / (2.0 * t)) - std::log1p(k * u) / k;
}

/// q-Gaussian transition density centred at x0 after t days.
inline double qgaussian_pdf(const QGaussianParams& p, double x, double x0, double t) {
    return std::exp(qgaussian_log_pdf(p, x, x0, t));
}

/// Scaled Student-t form of the same density, evaluated independently of C_q.
inline double student_pdf(const StudentParams& s, double x, double x0, double t) {
    validate(s);
    if (!(t > 0.0)) throw std::domain_error("student_pdf: time must be positive");
    const double scale2 = s.nu * s.s * s.s * t;
    const double y = x - x0;
    return std::exp(-specfun::log_beta(0.5, 0.5 * s.nu) - 0.5 * std::log(scale2) -
                    0.5 * (s.nu + 1.0) * std::log1p(y * y / scale2));
}

namespace detail {

// Probability mass of the q-Gaussian below its centre minus dd standard units,
// i.e. (1/2) I_{1/(1+(q-1)dd^2/2)}((3-q)/(2q-2), 1/2) for q > 1. dd >= 0.
inline double qgaussian_lower_tail(double q, double dd) {
    if (q == 1.0) return specfun::normal_cdf(-dd);
    const double k = q - 1.0;
    const double eps = 0.5 * k * dd * dd;
    const double z = 1.0 / (1.0 + eps);
    const double zc = eps / (1.0 + eps);
    const double a = (3.0 - q) / (2.0 * k);
    return 0.5 * specfun::detail::ibeta(a, 0.5, z, zc);
}

}  // namespace detail

inline double qgaussian_cdf(const QGaussianParams& p, double x, double x0, double t) {
    validate(p);
    if (!(t > 0.0)) throw std::domain_error("qgaussian_cdf: time must be positive");
    if (std::isinf(x)) return x < 0.0 ? 0.0 : 1.0;
    const double y = x - x0;
    const double dd = std::fabs(y) * std::sqrt(p.beta_tilde / t);
    const double tail = detail::qgaussian_lower_tail(p.q, dd);
    return y <= 0.0 ? tail : 1.0 - tail;
}

enum class VarianceRegime { Finite, Divergent, Undefined };

struct Variance {
    VarianceRegime regime;
    double value;  // per unit time; only meaningful when regime == Finite
};

inline Variance qgaussian_variance(const QGaussianParams& p) {
    validate(p);
    if (p.q < 5.0 / 3.0) return {VarianceRegime::Finite, 2.0 / ((5.0 - 3.0 * p.q) * p.beta_tilde)};
    if (p.q < 2.0) return {VarianceRegime::Divergent, std::numeric_limits<double>::infinity()};
    return {VarianceRegime::Undefined, std::numeric_limits<double>::quiet_NaN()};
}

/// Power-law tail exponent 2/(q-1); empty in the Gaussian regime.
inline std::optional<double> tail_exponent(const QGaussianParams& p) {
    validate(p);
    if (p.is_gaussian()) return std::nullopt;
    return 2.0 / (p.q - 1.0);
}

/// Generator stream for (seed, unit). Independent of scheduling order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t unit = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32)};
    return std::mt19937_64(seq);
}

/// Draws from the q-Gaussian via the Gamma mixture: beta ~ Gamma(a, b), then a
/// Gaussian with precision beta / t.
inline std::vector<double> sample_qgaussian(const QGaussianParams& p, std::size_t n, double t, std::uint64_t seed,
                                            double x0 = 0.0) {
    validate(p);
    if (n == 0) throw std::invalid_argument("sample_qgaussian: n must be at least 1");
    if (!(t > 0.0)) throw std::domain_error("sample_qgaussian: time must be positive");
    auto rng = make_stream(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n);
    if (p.is_gaussian()) {
        const double sd = std::sqrt(t / p.beta_tilde);
        for (auto& x : out) x = x0 + sd * normal(rng);
        return out;
    }
    const GammaParams g = q_to_gamma(p);
    std::gamma_distribution<double> precision(g.a, 1.0 / g.b);
    for (auto& x : out) {
        const double beta = precision(rng);
        x = x0 + std::sqrt(t / beta) * normal(rng);
    }
    return out;
}

}  // namespace qgd
