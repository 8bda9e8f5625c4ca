#pragma once

// Validation machinery: superstatistical return simulator, first-passage
// default paths, the Gamma-averaged Black-Cox PD, ROC/AUC and the balanced
// per-year resampling of a labeled PD table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgdefault/dist.hpp"
#include "qgdefault/market.hpp"
#include "qgdefault/models.hpp"

namespace qgd {

struct SimConfig {
    GammaParams gamma{3.0, 3.0};
    std::uint64_t regime_len_days = 50;  // mean volatility-regime length tau
    std::size_t n_days = 1000;
    double drift = 0.0;  // per day
    std::uint64_t seed = 1;
};

inline void validate(const SimConfig& c) {
    validate(c.gamma);
    if (c.regime_len_days < 1) throw std::invalid_argument("SimConfig: regime_len_days must be at least 1");
    if (c.n_days < 2) throw std::invalid_argument("SimConfig: n_days must be at least 2");
    if (!std::isfinite(c.drift)) throw std::invalid_argument("SimConfig: drift must be finite");
}

inline const Date kSimulationStart = Date::from_ymd(2000, 1, 3);

namespace detail {

// One path of daily returns plus the per-day precision that generated it.
// Regimes have geometric lengths with mean tau; tau >= n_days freezes a single
// precision for the whole path.
struct RawPath {
    std::vector<double> v;
    std::vector<double> beta;
};

inline RawPath draw_superstat(const SimConfig& c, std::mt19937_64& rng) {
    std::gamma_distribution<double> precision(c.gamma.a, 1.0 / c.gamma.b);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool frozen = c.regime_len_days >= c.n_days;
    std::geometric_distribution<std::uint64_t> extra(1.0 / static_cast<double>(c.regime_len_days));
    RawPath p;
    p.v.reserve(c.n_days);
    p.beta.reserve(c.n_days);
    while (p.v.size() < c.n_days) {
        const double beta = precision(rng);
        const std::uint64_t len = frozen ? c.n_days : 1 + extra(rng);
        const double sd = 1.0 / std::sqrt(beta);
        for (std::uint64_t k = 0; k < len && p.v.size() < c.n_days; ++k) {
            p.v.push_back(c.drift + sd * normal(rng));
            p.beta.push_back(beta);
        }
    }
    return p;
}

inline ReturnSeries to_return_series(std::string firm_id, std::vector<double> v) {
    ReturnSeries r;
    r.firm_id = std::move(firm_id);
    r.dates = synthetic_trading_dates(kSimulationStart, v.size() + 1);
    r.dates.erase(r.dates.begin());
    r.v = std::move(v);
    return r;
}

}  // namespace detail

/// Superstatistical returns: a Gamma-drawn precision held over geometric
/// regimes of mean length tau, Gaussian i.i.d. returns within a regime.
inline ReturnSeries simulate_superstat(const SimConfig& cfg) {
    validate(cfg);
    auto rng = make_stream(cfg.seed);
    return detail::to_return_series("sim", detail::draw_superstat(cfg, rng).v);
}

/// How the barrier is watched between daily observations.
/// Daily: only end-of-day values. Substeps: k Brownian sub-increments per day.
/// Bridge: exact continuous monitoring of the Brownian bridge within each day.
struct Monitoring {
    enum class Kind { Daily, Substeps, Bridge } kind = Kind::Daily;
    int substeps = 1;

    static Monitoring daily() { return {}; }
    static Monitoring fine(int k) { return {Kind::Substeps, k}; }
    static Monitoring bridge() { return {Kind::Bridge, 1}; }
};

struct FirmPath {
    ReturnSeries returns;
    std::optional<std::size_t> default_day;  // returns observed before the barrier hit; 0 if x0 <= 0
};

/// Log-asset paths x0 + cumulative returns, one independent stream per firm.
/// The return series is identical across monitoring modes; the mode only
/// decides when (and whether) the barrier at 0 is considered hit.
inline std::vector<FirmPath> simulate_firm_paths(const SimConfig& cfg, double x0, std::size_t n_firms,
                                                 Monitoring mon = Monitoring::daily()) {
    validate(cfg);
    if (!std::isfinite(x0)) throw std::invalid_argument("simulate_firm_paths: x0 must be finite");
    if (mon.kind == Monitoring::Kind::Substeps && mon.substeps < 1) {
        throw std::invalid_argument("simulate_firm_paths: substeps must be at least 1");
    }
    std::vector<FirmPath> out;
    out.reserve(n_firms);
    const auto dates = synthetic_trading_dates(kSimulationStart, cfg.n_days + 1);
    for (std::size_t f = 0; f < n_firms; ++f) {
        auto rng = make_stream(cfg.seed, 2 * f);
        auto watch = make_stream(cfg.seed, 2 * f + 1);
        detail::RawPath raw = detail::draw_superstat(cfg, rng);
        FirmPath fp;
        fp.returns.firm_id = "sim" + std::to_string(f);
        fp.returns.dates.assign(dates.begin() + 1, dates.end());
        if (x0 <= 0.0) fp.default_day = 0;
        double x = x0;
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t d = 0; d < raw.v.size() && !fp.default_day; ++d) {
            const double next = x + raw.v[d];
            bool hit = next <= 0.0;
            if (!hit && mon.kind == Monitoring::Kind::Bridge) {
                // crossing probability of a bridge from x to next over one day with variance 1/beta
                hit = unif(watch) < std::exp(-2.0 * x * next * raw.beta[d]);
            } else if (!hit && mon.kind == Monitoring::Kind::Substeps && mon.substeps > 1) {
                // Brownian bridge pinned at both daily endpoints, sampled at k-1 interior points
                const int k = mon.substeps;
                const double sd = 1.0 / std::sqrt(raw.beta[d]);
                double y = x;
                for (int j = 1; j < k && !hit; ++j) {
                    const double remain = static_cast<double>(k - j + 1);
                    const double mean = y + (next - y) / remain;
                    const double var = (remain - 1.0) / (remain * static_cast<double>(k));
                    y = mean + sd * std::sqrt(var) * normal(watch);
                    hit = y <= 0.0;
                }
            }
            x = next;
            if (hit) fp.default_day = d + 1;
        }
        fp.returns.v = std::move(raw.v);
        out.push_back(std::move(fp));
    }
    return out;
}

struct Estimate {
    double mean;
    double std_error;
};

/// Gamma average of the exact driftless Black-Cox PD over beta ~ Gamma(a, b).
inline Estimate mc_pd_oracle(const GammaParams& g, double x0, double t, std::size_t n_draws, std::uint64_t seed) {
    validate(g);
    if (n_draws < 10000) throw std::invalid_argument("mc_pd_oracle: need at least 10^4 draws");
    auto rng = make_stream(seed);
    std::gamma_distribution<double> precision(g.a, 1.0 / g.b);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const double beta = std::max(precision(rng), std::numeric_limits<double>::min());
        const double pd = blackcox_pd(x0, 0.0, beta, t).pd;
        s += pd;
        s2 += pd * pd;
    }
    const double n = static_cast<double>(n_draws);
    const double mean = s / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

struct RocPoint {
    double fpr;
    double tpr;
};

struct RocResult {
    std::vector<RocPoint> points;
    double auc;
    std::size_t n_pos;
    std::size_t n_neg;
};

/// ROC over descending score thresholds; tied scores move diagonally.
/// Higher score means higher predicted default risk.
inline RocResult roc_curve(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_curve: scores and labels differ in length");
    std::vector<std::size_t> idx(scores.size());
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (!std::isfinite(scores[i])) throw std::domain_error("roc_curve: non-finite score");
        idx[i] = i;
        n_pos += labels[i] ? 1 : 0;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_curve: need both defaulters and non-defaulters");
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult r{{{0.0, 0.0}}, 0.0, n_pos, n_neg};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        const double s = scores[idx[i]];
        for (; i < idx.size() && scores[idx[i]] == s; ++i) (labels[idx[i]] ? tp : fp) += 1;
        const RocPoint p{static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos};
        const RocPoint& q = r.points.back();
        r.auc += (p.fpr - q.fpr) * (p.tpr + q.tpr) / 2.0;
        r.points.push_back(p);
    }
    return r;
}

/// One firm-year row of a labeled PD table.
struct PortfolioEntry {
    std::string firm_id;
    int year;
    double score;
    bool defaulted;
};

/// For every year with defaulters, draw as many distinct non-defaulters of
/// that year; all defaulters are kept.
inline std::vector<PortfolioEntry> balanced_resample(std::span<const PortfolioEntry> table, std::mt19937_64& rng) {
    std::map<int, std::vector<std::size_t>> pos, neg;
    for (std::size_t i = 0; i < table.size(); ++i) (table[i].defaulted ? pos : neg)[table[i].year].push_back(i);
    std::vector<PortfolioEntry> out;
    for (const auto& [year, p] : pos) {
        auto it = neg.find(year);
        const std::size_t have = it == neg.end() ? 0 : it->second.size();
        if (have < p.size()) {
            throw std::invalid_argument("balanced_resample: year " + std::to_string(year) + " has " +
                                        std::to_string(have) + " non-defaulters for " + std::to_string(p.size()) +
                                        " defaulters");
        }
        for (std::size_t i : p) out.push_back(table[i]);
        std::vector<std::size_t> pool = it->second;
        for (std::size_t k = 0; k < p.size(); ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
            std::swap(pool[k], pool[pick(rng)]);
            out.push_back(table[pool[k]]);
        }
    }
    return out;
}

struct AucDistribution {
    double mean;
    double stddev;  // sample standard deviation; 0 for a single repeat
    std::vector<double> samples;
};

inline double auc_of(std::span<const PortfolioEntry> rows) {
    std::vector<double> s;
    std::vector<bool> l;
    for (const auto& e : rows) {
        s.push_back(e.score);
        l.push_back(e.defaulted);
    }
    return roc_curve(s, l).auc;
}

/// AUC over `repeats` balanced per-year resamples; repeat k draws from
/// stream (seed, k).
inline AucDistribution resampled_auc(std::span<const PortfolioEntry> table, int repeats, std::uint64_t seed) {
    if (repeats < 1) throw std::invalid_argument("resampled_auc: repeats must be at least 1");
    AucDistribution d{0.0, 0.0, {}};
    for (int k = 0; k < repeats; ++k) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(k));
        const auto sample = balanced_resample(table, rng);
        d.samples.push_back(auc_of(sample));
    }
    for (double a : d.samples) d.mean += a;
    d.mean /= repeats;
    if (repeats > 1) {
        double ss = 0.0;
        for (double a : d.samples) ss += (a - d.mean) * (a - d.mean);
        d.stddev = std::sqrt(ss / (repeats - 1));
    }
    return d;
}

}  // namespace qgd
