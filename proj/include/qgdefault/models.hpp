#pragma once

// Structural default models on x = ln(V/D): Merton and Black-Cox with Gaussian
// returns, their q-Gaussian generalizations, distances to default, the
// absorbing-boundary Green function, and the two asymptotes of the q-Black-Cox PD.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgdefault/dist.hpp"
#include "qgdefault/specfun.hpp"

namespace qgd {

/// Issuer position relative to its default point at valuation time.
struct FirmState {
    double x0;        // ln(V0 / D)
    double leverage;  // R0 = D / V0

    static FirmState from_leverage(double leverage) {
        if (!(leverage > 0.0)) throw std::domain_error("FirmState: leverage must be positive");
        return {-std::log(leverage), leverage};
    }
    static FirmState from_values(double assets, double default_point) {
        if (!(assets > 0.0) || !(default_point > 0.0)) {
            throw std::domain_error("FirmState: assets and default point must be positive");
        }
        return {std::log(assets / default_point), default_point / assets};
    }
    [[nodiscard]] bool distressed() const { return x0 < 0.0; }
};

namespace detail {

inline void require_positive(double v, const char* what, const char* fn) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::domain_error(std::string(fn) + ": " + what + " must be positive and finite");
    }
}

}  // namespace detail

/// Merton DTD with drift: [x0 + m t] sqrt(beta / t).
inline double merton_dtd(double x0, double m, double beta, double t) {
    detail::require_positive(beta, "precision", "merton_dtd");
    detail::require_positive(t, "horizon", "merton_dtd");
    return (x0 + m * t) * std::sqrt(beta / t);
}

/// Generalized DTD x0 sqrt(beta_tilde / t).
inline double generalized_dtd(double x0, double beta_tilde, double t) {
    detail::require_positive(beta_tilde, "scale", "generalized_dtd");
    detail::require_positive(t, "horizon", "generalized_dtd");
    return x0 * std::sqrt(beta_tilde / t);
}

struct DistanceToDefault {
    double simple;       // x0 sqrt(beta / t)
    double generalized;  // x0 sqrt(beta_tilde / t)
    double horizon_days;
    std::optional<double> with_drift;
};

inline DistanceToDefault distance_to_default(double x0, double beta, double beta_tilde, double t,
                                             std::optional<double> drift = std::nullopt) {
    DistanceToDefault out{merton_dtd(x0, 0.0, beta, t), generalized_dtd(x0, beta_tilde, t), t, std::nullopt};
    if (drift) out.with_drift = merton_dtd(x0, *drift, beta, t);
    return out;
}

inline double merton_pd(double x0, double m, double beta, double T) {
    return specfun::normal_cdf(-merton_dtd(x0, m, beta, T));
}

/// First-passage PD. A path that already starts below the barrier reports
/// pd = 1 with barrier_crossed set.
struct BarrierPd {
    double pd;
    bool barrier_crossed = false;
};

inline BarrierPd blackcox_pd(double x0, double m, double beta, double t) {
    detail::require_positive(beta, "precision", "blackcox_pd");
    detail::require_positive(t, "horizon", "blackcox_pd");
    if (x0 < 0.0) return {1.0, true};
    const double s = std::sqrt(beta / t);
    const double direct = specfun::normal_cdf(-(x0 + m * t) * s);
    if (m == 0.0) return {2.0 * direct};
    const double image = std::exp(-2.0 * m * x0 * beta) * specfun::normal_cdf(-(x0 - m * t) * s);
    return {std::fmin(1.0, direct + image)};
}

inline double qmerton_pd(const QGaussianParams& p, double x0, double T) {
    validate(p);
    detail::require_positive(T, "horizon", "qmerton_pd");
    if (p.is_gaussian()) return merton_pd(x0, 0.0, p.beta_tilde, T);
    return qgaussian_cdf(p, 0.0, x0, T);
}

inline BarrierPd qblackcox_pd(const QGaussianParams& p, double x0, double t) {
    validate(p);
    detail::require_positive(t, "horizon", "qblackcox_pd");
    if (x0 < 0.0) return {1.0, true};
    if (p.is_gaussian()) return blackcox_pd(x0, 0.0, p.beta_tilde, t);
    return {2.0 * qgd::detail::qgaussian_lower_tail(p.q, generalized_dtd(x0, p.beta_tilde, t))};
}

enum class Regime { Valid, Marginal, Violated };

struct Approximation {
    double value;
    Regime regime;
};

/// Power-law asymptote for (q-1) dd^2 >> 1. Valid from 100, marginal in [10, 100).
inline Approximation qblackcox_asymptotic_far(const QGaussianParams& p, double x0, double t) {
    validate(p);
    if (p.is_gaussian()) throw std::domain_error("qblackcox_asymptotic_far: requires q > 1");
    const double q = p.q;
    const double dd = generalized_dtd(x0, p.beta_tilde, t);
    const double k = q - 1.0;
    const double n = (3.0 - q) / k;
    const double prefactor = 2.0 * std::pow(k, (q - 2.0) / k) / ((3.0 - q) * specfun::c_q(q));
    const double value = prefactor * std::pow(specfun::kSqrt2 / dd, n);
    const double g = k * dd * dd;
    const Regime r = g >= 100.0 ? Regime::Valid : (g >= 10.0 ? Regime::Marginal : Regime::Violated);
    return {value, r};
}

/// Linear asymptote 1 - sqrt2 dd / C_q for (q-1) dd^2 << 1. Valid up to 0.01,
/// marginal up to 0.1.
inline Approximation qblackcox_asymptotic_near(const QGaussianParams& p, double x0, double t) {
    validate(p);
    const double dd = generalized_dtd(x0, p.beta_tilde, t);
    const double cq = p.is_gaussian() ? specfun::kSqrtPi : specfun::c_q(p.q);
    const double value = 1.0 - specfun::kSqrt2 * dd / cq;
    const double g = (p.q - 1.0) * dd * dd;
    const Regime r = g <= 0.01 ? Regime::Valid : (g <= 0.1 ? Regime::Marginal : Regime::Violated);
    return {value, r};
}

/// Transition density of the drifted diffusion with an absorbing barrier at x = 0.
inline double absorbing_green(double beta, double m, double x, double x0, double t) {
    detail::require_positive(beta, "precision", "absorbing_green");
    detail::require_positive(t, "horizon", "absorbing_green");
    if (x < 0.0) throw std::domain_error("absorbing_green: x must be nonnegative");
    if (!(x0 > 0.0)) throw std::domain_error("absorbing_green: x0 must be positive");
    const double pref = std::sqrt(beta / (2.0 * specfun::kPi * t));
    const double drift = beta * m * (x - x0) - 0.5 * beta * m * m * t;
    const double dm = x - x0;
    const double dp = x + x0;
    return pref * (std::exp(drift - beta * dm * dm / (2.0 * t)) - std::exp(drift - beta * dp * dp / (2.0 * t)));
}

enum class PdModel { Merton, BlackCox, QMerton, QBlackCox };

inline const char* to_string(PdModel m) {
    switch (m) {
        case PdModel::Merton: return "merton";
        case PdModel::BlackCox: return "blackcox";
        case PdModel::QMerton: return "qmerton";
        case PdModel::QBlackCox: return "qblackcox";
    }
    return "unknown";
}

/// Cumulative PD term structure for one model.
struct PdCurve {
    PdModel model;
    std::vector<double> horizons;  // trading days, ascending
    std::vector<double> pd;

    [[nodiscard]] double cap() const {
        return (model == PdModel::Merton || model == PdModel::QMerton) ? 0.5 : 1.0;
    }
};

namespace detail {

inline void check_horizons(std::span<const double> horizons) {
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (!(horizons[i] > 0.0)) throw std::domain_error("pd_curve: horizons must be positive");
        if (i > 0 && !(horizons[i] > horizons[i - 1])) {
            throw std::invalid_argument("pd_curve: horizons must be strictly ascending");
        }
    }
}

}  // namespace detail

/// Gaussian-model term structure (Merton or Black-Cox) with an explicit drift.
inline PdCurve pd_curve(PdModel model, double x0, const GaussianLaw& law, std::span<const double> horizons) {
    if (model != PdModel::Merton && model != PdModel::BlackCox) {
        throw std::invalid_argument("pd_curve: Gaussian law given for a q-model");
    }
    detail::check_horizons(horizons);
    PdCurve c{model, {horizons.begin(), horizons.end()}, {}};
    c.pd.reserve(horizons.size());
    for (double t : horizons) {
        c.pd.push_back(model == PdModel::Merton ? merton_pd(x0, law.m, law.beta, t)
                                                : blackcox_pd(x0, law.m, law.beta, t).pd);
    }
    return c;
}

inline PdCurve pd_curve(PdModel model, double x0, const QGaussianParams& p, std::span<const double> horizons) {
    if (model != PdModel::QMerton && model != PdModel::QBlackCox) {
        throw std::invalid_argument("pd_curve: q-Gaussian law given for a Gaussian model");
    }
    detail::check_horizons(horizons);
    PdCurve c{model, {horizons.begin(), horizons.end()}, {}};
    c.pd.reserve(horizons.size());
    for (double t : horizons) {
        c.pd.push_back(model == PdModel::QMerton ? qmerton_pd(p, x0, t) : qblackcox_pd(p, x0, t).pd);
    }
    return c;
}

}  // namespace qgd
