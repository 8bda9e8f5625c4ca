#pragma once

// Special-function kernel: error function, normal CDF, log-Gamma, Beta,
// regularized incomplete Beta and Gamma, digamma, and the q-Gaussian
// normalization constant. Everything here is a pure function of its
// arguments.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qgd::specfun {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

namespace detail {

inline void require_finite(double x, const char* fn) {
    if (!std::isfinite(x)) {
        throw std::domain_error(std::string(fn) + ": non-finite argument");
    }
}

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n (2x^2)^n x / (2n+1)!!, all terms positive.
inline double erf_series(double x) {
    const double x2 = 2.0 * x * x;
    double term = x;
    double sum = x;
    for (int n = 1; n < 500; ++n) {
        term *= x2 / (2.0 * n + 1.0);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return 2.0 / kSqrtPi * std::exp(-x * x) * sum;
}

// Continued fraction for erfc, x >= 3:
// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
inline double erfc_cf(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int k = 1; k < 5000; ++k) {
        const double a = 0.5 * k;
        d = x + a * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x * x) / kSqrtPi / f;
}

// Stirling remainder lnG(x) - [(x-1/2)ln x - x + ln(2pi)/2], valid for x >= 10.
inline double stirling_remainder(double x) {
    static constexpr std::array<double, 8> c = {
        1.0 / 12.0,      -1.0 / 360.0,       1.0 / 1260.0, -1.0 / 1680.0,
        1.0 / 1188.0,    -691.0 / 360360.0,  1.0 / 156.0,  -3617.0 / 122400.0};
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double sum = 0.0;
    double p = inv;
    for (double ck : c) {
        sum += ck * p;
        p *= inv2;
    }
    return sum;
}

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

inline double lanczos_log_gamma(double x) {
    // g = 7, n = 9
    static constexpr std::array<double, 9> c = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const double z = x - 1.0;
    double a = c[0];
    const double t = z + 7.5;
    for (int i = 1; i < 9; ++i) a += c[i] / (z + i);
    return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(a);
}

// Modified Lentz evaluation of the incomplete-Beta continued fraction.
inline double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr int max_iter = 100000;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) return h;
    }
    throw std::runtime_error("reg_inc_beta: continued fraction did not converge");
}

}  // namespace detail

/// Error function, odd and bounded in (-1, 1).
inline double erf(double x) {
    detail::require_finite(x, "erf");
    const double ax = std::fabs(x);
    const double r = ax < 3.0 ? detail::erf_series(ax) : 1.0 - detail::erfc_cf(ax);
    return x < 0.0 ? -r : r;
}

/// Complementary error function with full relative accuracy in the right tail.
inline double erfc(double x) {
    detail::require_finite(x, "erfc");
    const double ax = std::fabs(x);
    const double r = ax < 3.0 ? 1.0 - detail::erf_series(ax) : detail::erfc_cf(ax);
    return x < 0.0 ? 2.0 - r : r;
}

/// Standard normal CDF, Phi(z) = [1 + erf(z/sqrt2)]/2, evaluated through erfc
/// so the lower tail keeps relative precision.
inline double normal_cdf(double z) {
    detail::require_finite(z, "normal_cdf");
    return 0.5 * erfc(-z / kSqrt2);
}

inline double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("log_gamma: argument must be positive and finite");
    }
    if (x < 0.5) return detail::lanczos_log_gamma(x + 1.0) - std::log(x);
    if (x < 10.0) return detail::lanczos_log_gamma(x);
    return (x - 0.5) * std::log(x) - x + detail::kHalfLog2Pi + detail::stirling_remainder(x);
}

/// ln B(m, n). Large arguments go through the Stirling form so the
/// difference lnG(m) - lnG(m+n) does not cancel catastrophically.
inline double log_beta(double m, double n) {
    if (!(m > 0.0) || !(n > 0.0) || !std::isfinite(m) || !std::isfinite(n)) {
        throw std::domain_error("beta: shapes must be positive and finite");
    }
    const double big = std::fmax(m, n);
    const double small = std::fmin(m, n);
    if (big < 10.0) return log_gamma(m) + log_gamma(n) - log_gamma(m + n);
    const double s = big + small;
    const double corr = detail::stirling_remainder(big) - detail::stirling_remainder(s);
    if (small < 10.0) {
        // lnG(big) - lnG(big+small) in Stirling form
        const double ratio = -(big - 0.5) * std::log1p(small / big) - small * std::log(s) + small + corr;
        return log_gamma(small) + ratio;
    }
    return detail::kHalfLog2Pi - (big - 0.5) * std::log1p(small / big) - small * std::log(s / small) -
           0.5 * std::log(small) + detail::stirling_remainder(small) + corr;
}

inline double beta(double m, double n) { return std::exp(log_beta(m, n)); }

/// Arguments of I_z(m, n).
struct BetaArgs {
    double m;
    double n;
    double z;
};

namespace detail {

// I_z(a, b) with the complement zc = 1 - z passed separately, so callers that
// know 1 - z more precisely than z can keep that precision.
inline double ibeta(double a, double b, double z, double zc) {
    if (z <= 0.0) return 0.0;
    if (zc <= 0.0) return 1.0;
    const double lfront = a * std::log(z) + b * std::log(zc) - log_beta(a, b);
    if (z < a / (a + b)) return std::exp(lfront) * beta_cf(a, b, z) / a;
    return 1.0 - std::exp(lfront) * beta_cf(b, a, zc) / b;
}

inline void check_beta_args(const BetaArgs& args) {
    if (!(args.m > 0.0) || !(args.n > 0.0) || !std::isfinite(args.m) || !std::isfinite(args.n)) {
        throw std::domain_error("reg_inc_beta: shapes must be positive and finite");
    }
    if (!(args.z >= 0.0 && args.z <= 1.0)) {
        throw std::domain_error("reg_inc_beta: z must lie in [0, 1]");
    }
}

}  // namespace detail

/// Regularized incomplete Beta function I_z(m, n).
inline double reg_inc_beta(const BetaArgs& args) {
    detail::check_beta_args(args);
    return detail::ibeta(args.m, args.n, args.z, 1.0 - args.z);
}

inline double reg_inc_beta(double m, double n, double z) { return reg_inc_beta(BetaArgs{m, n, z}); }

/// Normalization of the q-Gaussian, C_q = B(1/2, (3-q)/(2(q-1))) / sqrt(q-1), for 1 < q < 3.
inline double c_q(double q) {
    if (!(q > 1.0 && q < 3.0)) throw std::domain_error("c_q: q must lie in (1, 3)");
    const double k = q - 1.0;
    const double a = (3.0 - q) / (2.0 * k);
    return std::exp(log_beta(0.5, a) - 0.5 * std::log(k));
}

inline double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("digamma: argument must be positive");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv2 = 1.0 / (x * x);
    const double series =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    return acc + std::log(x) - 0.5 / x - series;
}

/// psi(a + h) - psi(a), stable for large a.
inline double digamma_diff(double a, double h) {
    if (a < 10.0 || a + h < 10.0) return digamma(a + h) - digamma(a);
    auto tail = [](double x) {
        const double inv2 = 1.0 / (x * x);
        return -0.5 / x -
               inv2 * (1.0 / 12.0 -
                       inv2 * (1.0 / 120.0 -
                               inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    };
    return std::log1p(h / a) + tail(a + h) - tail(a);
}

/// Regularized lower incomplete Gamma P(a, x).
inline double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("reg_lower_gamma: shape must be positive");
    if (!(x >= 0.0)) throw std::domain_error("reg_lower_gamma: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double lpref = a * std::log(x) - x - log_gamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double del = 1.0 / a;
        double sum = del;
        for (int i = 0; i < 100000; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(lpref);
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(lpref) * h;
}

inline double reg_upper_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("reg_upper_gamma: shape must be positive");
    if (!(x >= 0.0)) throw std::domain_error("reg_upper_gamma: x must be nonnegative");
    if (x < a + 1.0) return 1.0 - reg_lower_gamma(a, x);
    if (std::isinf(x)) return 0.0;
    // continued fraction directly, keeps relative precision in the tail
    const double lpref = a * std::log(x) - x - log_gamma(a);
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(lpref) * h;
}

/// Survival function of the asymptotic Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Jacobi-transformed series converges fast for small lambda
        const double w = kPi * kPi / (8.0 * lambda * lambda);
        double cdf = 0.0;
        for (int k = 1; k < 50; k += 2) cdf += std::exp(-w * k * k);
        cdf *= std::sqrt(2.0 * kPi) / lambda;
        return 1.0 - cdf;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::fmin(1.0, std::fmax(0.0, 2.0 * sum));
}

}  // namespace qgd::specfun
