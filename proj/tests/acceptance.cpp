// Acceptance run: one PASS/FAIL line per criterion with the measured values.
//
//   acceptance [--only N[,N...]] [--expect-fail N[,N...]]
//
// Exit status is 0 when every criterion passes, except those named with
// --expect-fail, which are still run and reported as FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qgdefault/pipeline.hpp"
#include "support/oracles.hpp"

using namespace qgd;
namespace sf = qgd::specfun;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

// 1: special functions against quadrature and closed forms.
Outcome special_functions() {
    const std::vector<double> shapes = {0.25, 0.5, 1.0, 1.5, 3.0, 10.0};
    double worst = 0.0;
    for (double m : shapes) {
        for (double n : shapes) {
            for (int k = 1; k <= 99; ++k) {
                const double z = k / 100.0;
                worst = std::max(worst, std::fabs(sf::reg_inc_beta(m, n, z) - oracle::inc_beta(m, n, z)));
            }
        }
    }
    const double trig = std::fabs(sf::reg_inc_beta(1.5, 0.5, 0.5) - oracle::ibeta_three_halves_half(0.5));
    const double cq = std::fabs(sf::c_q(2.0) - std::numbers::pi);
    return {worst < 1e-8 && trig < 1e-12 && cq < 1e-12,
            fmt("max|I - quad|=%.2e (<1e-8), I_0.5(1.5,0.5)=%.12f err %.1e, |c_2 - pi|=%.1e (<1e-12)", worst,
                sf::reg_inc_beta(1.5, 0.5, 0.5), trig, cq)};
}

// 2: q -> 1 recovers 2 Phi(-dd).
Outcome gaussian_limit() {
    const QGaussianParams p{1.0 + 1e-6, 1.0};
    double worst = 0.0;
    for (int i = 0; i <= 590; ++i) {
        const double dd = 0.1 + 0.01 * i;
        worst = std::max(worst, std::fabs(qblackcox_pd(p, dd, 1.0).pd - 2.0 * sf::normal_cdf(-dd)));
    }
    return {worst < 1e-5, fmt("max over dd in [0.1, 6] = %.2e (<1e-5)", worst)};
}

// 3: Gamma mixture of Black-Cox PDs equals the closed form.
Outcome mixture_bridge() {
    auto rng = make_stream(2024);
    std::uniform_real_distribution<double> ua(0.6, 10.0), ux(0.5, 5.0), ub(0.5, 2.0);
    int inside = 0;
    double worst_z = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double a = ua(rng), x0 = ux(rng);
        const double t = (k % 2 == 0) ? 21.0 : 250.0;
        // rate chosen so the typical dd is of order one
        const double b = ub(rng) * a * x0 * x0 / t;
        const GammaParams g{a, b};
        const Estimate mc = mc_pd_oracle(g, x0, t, 1'000'000, 100 + static_cast<std::uint64_t>(k));
        const double exact = qblackcox_pd(gamma_to_q(g), x0, t).pd;
        const double z = std::fabs(mc.mean - exact) / std::max(mc.std_error, 1e-300);
        worst_z = std::max(worst_z, z);
        inside += z < 3.0 ? 1 : 0;
    }
    return {inside == 20, fmt("%d/20 sets within 3 SE, worst %.2f SE", inside, worst_z)};
}

// 4: far asymptote.
Outcome far_asymptote() {
    const QGaussianParams p{1.5, 1.0};
    const double exact = qblackcox_pd(p, 20.0, 1.0).pd;
    const double approx = qblackcox_asymptotic_far(p, 20.0, 1.0).value;
    const double rel = std::fabs(approx / exact - 1.0);
    return {rel < 0.05 && std::fabs(exact - 4.19e-4) < 0.005e-4,
            fmt("exact %.4e (4.19e-4), asymptote %.4e, rel err %.2f%% (<5%%)", exact, approx, 100.0 * rel)};
}

// 5: near asymptote.
Outcome near_asymptote() {
    double worst = 0.0;
    std::string parts;
    for (double q : {1.2, 1.5, 1.8}) {
        const double dd = std::sqrt(0.01 / (q - 1.0));
        const QGaussianParams p{q, 1.0};
        const double err = std::fabs(qblackcox_asymptotic_near(p, dd, 1.0).value - qblackcox_pd(p, dd, 1.0).pd);
        worst = std::max(worst, err);
        parts += fmt(" q=%.1f:%.2e", q, err);
    }
    return {worst < 0.01, "abs err" + parts + " (<0.01)"};
}

// 6: finite variance below q = 5/3, no stable variance above it.
Outcome variance_threshold() {
    const double bt = 1.0;
    const double target = 2.0 / ((5.0 - 3.0 * 1.4) * bt);
    const auto a = sample_qgaussian({1.4, bt}, 1'000'000, 1.0, 6);
    double s = 0.0, s2 = 0.0;
    for (double x : a) {
        s += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(a.size());
    const double var = (s2 - s * s / n) / (n - 1.0);
    const double rel = std::fabs(var / target - 1.0);

    const auto b = sample_qgaussian({1.75, bt}, 1'000'000, 1.0, 6);
    double run = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        run += b[i] * b[i];
        if (i + 1 >= 1000) peak = std::max(peak, run / static_cast<double>(i + 1));
    }
    return {rel < 0.02 && peak > 5.0 * target,
            fmt("q=1.4 var %.4f vs %.4f (%.2f%%, <2%%); q=1.75 max prefix (n>=1000) mean square %.2f vs 5x%.2f", var,
                target, 100.0 * rel, peak, target)};
}

// 7: MLE recovery sweep.
Outcome mle_recovery() {
    std::vector<double> dq, dbeta;
    int nonconv = 0;
    for (double q : {1.2, 1.4, 1.6, 1.8}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const QGaussianParams truth{q, 2500.0};
            const auto v = sample_qgaussian(truth, 1500, 1.0, 7000 + seed);
            const FitResult f = fit_qgaussian_mle(v);
            nonconv += f.converged ? 0 : 1;
            dq.push_back(std::fabs(f.params.q - q));
            dbeta.push_back(std::fabs(f.params.beta_tilde / truth.beta_tilde - 1.0));
        }
    }
    const double med = quantile(dq, 0.5), p90 = quantile(dq, 0.9), mb = quantile(dbeta, 0.5);
    return {med < 0.06 && p90 < 0.15 && mb < 0.15,
            fmt("|dq| median %.4f (<0.06) p90 %.4f (<0.15); beta_tilde median rel err %.2f%% (<15%%); %d/80 "
                "unconverged",
                med, p90, 100.0 * mb, nonconv)};
}

// 8: ACF estimator and the clustering-without-linear-memory signature.
Outcome acf_fidelity() {
    auto rng = make_stream(8);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(100);
    for (auto& e : x) e = z(rng) * std::exp(0.5 * z(rng));
    const auto got = acf(x, AcfTransform::AbsReturn, 49);
    double m = 0.0;
    for (double e : x) m += std::fabs(e);
    m /= 100.0;
    double den = 0.0;
    for (double e : x) den += (std::fabs(e) - m) * (std::fabs(e) - m);
    double loop_err = 0.0;
    for (int h = 0; h <= 49; ++h) {
        double num = 0.0;
        for (int i = 0; i + h < 100; ++i) num += (std::fabs(x[i]) - m) * (std::fabs(x[i + h]) - m);
        loop_err = std::max(loop_err, std::fabs(got.values[h] - num / den));
    }

    SimConfig c;
    c.gamma = {1.5, 1.5};
    c.regime_len_days = 50;
    c.n_days = 5000;
    c.seed = 1;
    const auto r = simulate_superstat(c);
    const double n = static_cast<double>(r.v.size());
    const double abs50 = acf(r.v, AcfTransform::AbsReturn, 50).values[50];
    const auto raw = acf(r.v, AcfTransform::RawReturn, 50);
    const double band = 3.0 / std::sqrt(n);
    int inside = 0;
    double worst = 0.0;
    for (int h = 1; h <= 50; ++h) {
        inside += std::fabs(raw.values[h]) < band ? 1 : 0;
        worst = std::max(worst, std::fabs(raw.values[h]));
    }

    // Band that accounts for regime heteroskedasticity (informational only).
    double rm = 0.0;
    for (double e : r.v) rm += e;
    rm /= n;
    double rden = 0.0;
    for (double e : r.v) rden += (e - rm) * (e - rm);
    int robust_inside = 0;
    for (int h = 1; h <= 50; ++h) {
        double s = 0.0;
        for (std::size_t i = 0; i + h < r.v.size(); ++i) {
            const double p = (r.v[i] - rm) * (r.v[i + h] - rm);
            s += p * p;
        }
        robust_inside += std::fabs(raw.values[h]) < 3.0 * std::sqrt(s) / rden ? 1 : 0;
    }

    return {loop_err < 1e-14 && abs50 > 0.1 && inside == 50,
            fmt("double loop err %.1e (<1e-14); N=%zu tau=50 a=b=1.5: ACF(|v|,50)=%.4f (>0.1); raw |ACF| < 3/sqrt(N)=%.4f "
                "at %d/50 lags (worst %.4f); robust band %d/50",
                loop_err, r.v.size(), abs50, band, inside, worst, robust_inside)};
}

// 9: implied assets invert the call pricing.
Outcome implied_round_trip() {
    const double r = 0.02, T = 1.0, D = 100.0;
    auto rng = make_stream(9);
    std::normal_distribution<double> z(0.0, 0.3 / std::sqrt(250.0));
    std::vector<double> V(500);
    V[0] = 160.0;
    for (std::size_t i = 1; i < V.size(); ++i) V[i] = V[i - 1] * std::exp(z(rng));
    const double sigma = annualized_log_volatility(V);
    FirmSeries f{"GBM", synthetic_trading_dates(kSimulationStart, V.size()), {}, {}, std::nullopt};
    for (double v : V) {
        f.equity.push_back(equity_call_value(v, D, r, sigma, T));
        f.liabilities_raw.push_back(D);
    }
    const auto res = implied_assets_detailed(f, {r, T, DefaultPointPolicy::TotalLiabilities, 1e-10, 500});
    double worst = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) worst = std::max(worst, std::fabs(res.assets.V[i] / V[i] - 1.0));

    FirmSeries free = f;
    std::fill(free.liabilities_raw.begin(), free.liabilities_raw.end(), 0.0);
    const auto fr = implied_assets(free);
    const bool exact = fr.V == free.equity;
    return {worst < 1e-3 && exact, fmt("max rel V err %.2e (<1e-3) after %d sweeps; D=0 gives V=E exactly: %s", worst,
                                       res.sweeps, exact ? "yes" : "no")};
}

// 10: ROC area.
Outcome roc_correctness() {
    auto rng = make_stream(10);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 20 + static_cast<std::size_t>(rng() % 200);
        std::vector<double> s(n);
        std::vector<bool> y(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 30);  // plenty of ties
            y[i] = rng() % 3 == 0;
            (y[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) y[0] = !y[0];
        double wins = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (y[i] && !y[j]) {
                    pairs += 1.0;
                    wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                }
            }
        }
        worst = std::max(worst, std::fabs(roc_curve(s, y).auc - wins / pairs));
    }
    const double perfect = roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, {true, true, false, false}).auc;

    std::vector<double> s(10000);
    std::vector<bool> y(10000);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = u(rng);
        y[i] = i % 2 == 0;
    }
    std::shuffle(y.begin(), y.end(), rng);
    const double shuffled = roc_curve(s, y).auc;
    return {worst < 1e-12 && perfect == 1.0 && std::fabs(shuffled - 0.5) < 0.02,
            fmt("max|trapezoid - rank| %.1e (<1e-12); perfect %.3f; shuffled %.4f (0.5 +/- 0.02)", worst, perfect,
                shuffled)};
}

// 11 and 12: the synthetic portfolio through the full pipeline.
struct PortfolioRun {
    std::string market_csv;
    std::string pd_csv;
    std::string auc_csv;
    double mean_auc = 0.0;
    std::size_t defaulters = 0;
    std::size_t defaulters_fat = 0;  // final q > 3/2
    double min_final_q = 3.0;
    std::size_t dropped = 0;
    std::size_t failed = 0;
};

PortfolioRun run_portfolio() {
    PortfolioSimSpec spec;
    spec.n_thin = 360;
    spec.n_fat = 40;
    spec.n_days = 1750;
    spec.min_history_days = 502;
    spec.seed = 11;
    PortfolioRun out;
    out.market_csv = to_string(market_table(simulate_portfolio(spec)), OutputFormat::Csv);

    IngestResult in = read_market_csv(out.market_csv);
    if (!in.report.rejects.empty()) throw std::runtime_error("simulated market CSV has rejected rows");
    RunConfig cfg;
    cfg.seed = 11;
    const auto runs = run_pipeline(in.firms, cfg);
    out.pd_csv = to_string(pd_table(runs), OutputFormat::Csv);

    std::istringstream pd_in(out.pd_csv);
    const auto back = read_pd_table(pd_in, in.firms);
    for (const auto& run : runs) out.failed += run.ok() ? 0 : 1;
    for (const auto& run : back) {
        if (!run.default_date) continue;
        ++out.defaulters;
        const double q = run.rows.empty() ? 1.0 : run.rows.back().q;
        out.min_final_q = std::min(out.min_final_q, q);
        out.defaulters_fat += q > 1.5 ? 1 : 0;
    }
    const Portfolio pf = build_portfolio(back, cfg.horizon_days);
    out.dropped = pf.dropped.size();
    const AucDistribution d = resampled_auc(pf.entries, 100, cfg.seed);
    out.mean_auc = d.mean;
    out.auc_csv = to_string(auc_table(d), OutputFormat::Csv);
    return out;
}

Outcome end_to_end(const PortfolioRun& r) {
    return {r.mean_auc > 0.9 && r.defaulters > 0 && r.defaulters_fat == r.defaulters && r.failed == 0,
            fmt("mean AUC %.4f (>0.9); %zu/%zu defaulters with final q > 1.5 (min %.3f); %zu firm failures, %zu "
                "defaulters without a scored year",
                r.mean_auc, r.defaulters_fat, r.defaulters, r.min_final_q, r.failed, r.dropped)};
}

std::set<int> parse_ids(const char* s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only = parse_ids(argv[++i]);
        } else if (a == "--expect-fail" && i + 1 < argc) {
            expect_fail = parse_ids(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--only N,...] [--expect-fail N,...]\n");
            return 2;
        }
    }

    PortfolioRun first;
    const std::vector<Criterion> all = {
        {1, "special functions vs quadrature", 1.0, special_functions},
        {2, "q -> 1 reduction", 1.0, gaussian_limit},
        {3, "Gamma mixture bridge", 30.0, mixture_bridge},
        {4, "far asymptote", 1.0, far_asymptote},
        {5, "near asymptote", 1.0, near_asymptote},
        {6, "variance threshold", 30.0, variance_threshold},
        {7, "MLE recovery", 120.0, mle_recovery},
        {8, "ACF fidelity and clustering", 10.0, acf_fidelity},
        {9, "implied-assets round trip", 10.0, implied_round_trip},
        {10, "ROC correctness", 10.0, roc_correctness},
        {11, "end-to-end synthetic portfolio", 600.0,
         [&] {
             first = run_portfolio();
             return end_to_end(first);
         }},
        {12, "determinism", 600.0,
         [&] {
             if (first.pd_csv.empty()) first = run_portfolio();
             const PortfolioRun second = run_portfolio();
             const bool same = first.market_csv == second.market_csv && first.pd_csv == second.pd_csv &&
                               first.auc_csv == second.auc_csv;
             return Outcome{same, fmt("market, pd and auc tables byte-identical across two runs: %s (%zu bytes)",
                                      same ? "yes" : "no", first.pd_csv.size())};
         }},
    };

    int unexpected = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs < c.budget_s;
        std::printf("%s  %2d  %-32s %s [%.2fs, budget %.0fs]%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, !pass && expect_fail.count(c.id) ? " (expected)" : "");
        std::fflush(stdout);
        if (!pass && !expect_fail.count(c.id)) ++unexpected;
    }
    return unexpected == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
