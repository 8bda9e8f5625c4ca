#pragma once

// End-to-end driver: firm series -> asset values -> rolling fits -> DTDs and
// 1-year PDs, plus the labeled firm-year portfolio used for ROC analysis and
// a synthetic portfolio generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgdefault/dist.hpp"
#include "qgdefault/eval.hpp"
#include "qgdefault/inference.hpp"
#include "qgdefault/market.hpp"
#include "qgdefault/models.hpp"
#include "qgdefault/table.hpp"

namespace qgd {

struct RunConfig {
    std::vector<std::string> inputs;
    AssetMethod method = AssetMethod::DirectProxy;
    DefaultPointPolicy dp_policy = DefaultPointPolicy::TotalLiabilities;
    std::size_t window = 250;
    std::size_t horizon_days = 250;
    double risk_free = 0.02;    // per year
    double option_years = 1.0;  // implied method only
    double tol = 1e-6;          // implied method only
    std::uint64_t seed = 1;
    OutputFormat format = OutputFormat::Csv;
    std::string out_dir = "qgd_run";
};

inline void validate(const RunConfig& c) {
    if (c.window < 100) throw std::invalid_argument("config: window must be at least 100");
    if (c.horizon_days < 1) throw std::invalid_argument("config: horizon_days must be at least 1");
    if (!std::isfinite(c.risk_free)) throw std::invalid_argument("config: risk_free must be finite");
    if (!(c.option_years > 0.0)) throw std::invalid_argument("config: option_years must be positive");
    if (!(c.tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
}

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    return x;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("config: " + key + " expects a nonnegative integer, got '" + v + "'");
    }
    return std::stoull(v);
}

}  // namespace detail

inline AssetMethod parse_method(const std::string& v) {
    if (v == "proxy") return AssetMethod::DirectProxy;
    if (v == "implied") return AssetMethod::IterativeImplied;
    throw std::invalid_argument("unknown method '" + v + "' (expected proxy or implied)");
}

inline DefaultPointPolicy parse_policy(const std::string& v) {
    if (v == "total") return DefaultPointPolicy::TotalLiabilities;
    if (v == "total80") return DefaultPointPolicy::Liabilities80;
    throw std::invalid_argument("unknown dp_policy '" + v + "' (expected total or total80)");
}

/// Sets one RunConfig field from its text form. `inputs` takes a
/// comma-separated list of paths.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    const std::string v = detail::trim(value);
    if (key == "inputs" || key == "input") {
        c.inputs.clear();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (!item.empty()) c.inputs.push_back(item);
        }
    } else if (key == "method") {
        c.method = parse_method(v);
    } else if (key == "dp_policy") {
        c.dp_policy = parse_policy(v);
    } else if (key == "window") {
        c.window = detail::parse_count(key, v);
    } else if (key == "horizon_days") {
        c.horizon_days = detail::parse_count(key, v);
    } else if (key == "risk_free") {
        c.risk_free = detail::parse_real(key, v);
    } else if (key == "option_years") {
        c.option_years = detail::parse_real(key, v);
    } else if (key == "tol") {
        c.tol = detail::parse_real(key, v);
    } else if (key == "seed") {
        c.seed = detail::parse_count(key, v);
    } else if (key == "format") {
        c.format = parse_format(v);
    } else if (key == "out_dir") {
        c.out_dir = v;
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

/// Flat `key = value` lines; blank lines and lines starting with '#' are skipped.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

/// One pipeline output row: the fit of the window ending on `date` and the
/// DTDs and PDs over the configured horizon from that date.
struct PdRow {
    std::string firm_id;
    Date date;
    double x0;          // ln(V / default point); +inf without debt
    double q;
    double beta_tilde;  // per day
    double beta;        // Gaussian precision of the same window, per day
    double loglik;
    double dtd_generalized;
    double dtd_simple;
    double pd_bc;
    double pd_qbc;
    bool converged;
    bool boundary_hit;
};

struct FirmRun {
    std::string firm_id;
    std::optional<Date> default_date;
    std::vector<PdRow> rows;
    std::string error;  // empty on success

    [[nodiscard]] bool ok() const { return error.empty(); }
};

inline AssetSeries build_assets(const FirmSeries& f, const RunConfig& cfg) {
    if (cfg.method == AssetMethod::DirectProxy) return direct_proxy_assets(f, cfg.dp_policy);
    return implied_assets(f, cfg.risk_free, cfg.option_years, cfg.dp_policy, cfg.tol);
}

/// Rolling fits and PDs for one firm. Throws on firm-level failure.
inline std::vector<PdRow> firm_pd_rows(const FirmSeries& f, const RunConfig& cfg) {
    validate(cfg);
    const AssetSeries a = build_assets(f, cfg);
    const ReturnSeries r = log_returns(a);
    if (r.size() < cfg.window + 1) {
        throw std::invalid_argument("firm " + f.firm_id + ": " + std::to_string(f.size()) +
                                    " observations, need at least " + std::to_string(cfg.window + 2));
    }
    const auto fits = rolling_fit(r, cfg.window);
    const double T = static_cast<double>(cfg.horizon_days);
    const std::span<const double> all(r.v);
    std::vector<PdRow> rows;
    rows.reserve(fits.size());
    for (const FitResult& fit : fits) {
        const auto it = std::lower_bound(r.dates.begin(), r.dates.end(), *fit.window_end_date);
        const auto e = static_cast<std::size_t>(it - r.dates.begin());
        const FitResult g = fit_gaussian_mle(all.subspan(e + 1 - cfg.window, cfg.window));
        PdRow row{f.firm_id, r.dates[e], 0.0, fit.params.q, fit.params.beta_tilde, g.params.beta_tilde,
                  fit.log_likelihood, 0.0, 0.0, 0.0, 0.0, fit.converged, fit.boundary_hit};
        const double V = a.V[e + 1];
        const double D = a.D[e + 1];
        if (D <= 0.0) {
            const double inf = std::numeric_limits<double>::infinity();
            row.x0 = row.dtd_generalized = row.dtd_simple = inf;
        } else {
            row.x0 = std::log(V / D);
            row.dtd_generalized = generalized_dtd(row.x0, row.beta_tilde, T);
            row.dtd_simple = merton_dtd(row.x0, 0.0, row.beta, T);
            row.pd_bc = blackcox_pd(row.x0, 0.0, row.beta, T).pd;
            row.pd_qbc = qblackcox_pd(fit.params, row.x0, T).pd;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Runs every firm; a failing firm is reported in its FirmRun and does not
/// stop the others. Output is in firm_id order.
inline std::vector<FirmRun> run_pipeline(std::span<const FirmSeries> firms, const RunConfig& cfg) {
    validate(cfg);
    std::vector<FirmRun> out;
    out.reserve(firms.size());
    for (const FirmSeries& f : firms) {
        FirmRun run{f.firm_id, f.default_date, {}, {}};
        try {
            run.rows = firm_pd_rows(f, cfg);
            if (run.rows.empty()) run.error = "no window could be fitted";
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        out.push_back(std::move(run));
    }
    std::stable_sort(out.begin(), out.end(), [](const FirmRun& a, const FirmRun& b) { return a.firm_id < b.firm_id; });
    return out;
}

inline Table pd_table(std::span<const FirmRun> runs) {
    Table t{{"firm_id", "date", "x0", "q", "beta_tilde", "beta", "dtd_generalized", "dtd_simple", "pd_bc", "pd_qbc",
             "converged", "boundary_hit"},
            {}};
    for (const auto& run : runs) {
        for (const auto& r : run.rows) {
            t.add({r.firm_id, r.date.iso(), r.x0, r.q, r.beta_tilde, r.beta, r.dtd_generalized, r.dtd_simple, r.pd_bc,
                   r.pd_qbc, r.converged, r.boundary_hit});
        }
    }
    return t;
}

inline Table fits_table(std::span<const FirmRun> runs) {
    Table t{{"firm_id", "window_end_date", "q", "beta_tilde", "loglik", "converged"}, {}};
    for (const auto& run : runs) {
        for (const auto& r : run.rows) t.add({r.firm_id, r.date.iso(), r.q, r.beta_tilde, r.loglik, r.converged});
    }
    return t;
}

inline Table failures_table(std::span<const FirmRun> runs) {
    Table t{{"firm_id", "error"}, {}};
    for (const auto& run : runs) {
        if (!run.ok()) t.add({run.firm_id, run.error});
    }
    return t;
}

/// Reads a table written by pd_table (CSV) back into FirmRuns; default dates
/// are attached from `firms` by id.
inline std::vector<FirmRun> read_pd_table(std::istream& in, std::span<const FirmSeries> firms = {}) {
    const CsvRows csv = read_csv_rows(in);
    const std::size_t c_firm = csv.column("firm_id"), c_date = csv.column("date"), c_x0 = csv.column("x0"),
                      c_q = csv.column("q"), c_bt = csv.column("beta_tilde"), c_b = csv.column("beta"),
                      c_dg = csv.column("dtd_generalized"), c_ds = csv.column("dtd_simple"),
                      c_bc = csv.column("pd_bc"), c_qbc = csv.column("pd_qbc"), c_conv = csv.column("converged"),
                      c_bh = csv.column("boundary_hit");
    std::map<std::string, FirmRun> by_id;
    auto num = [](const std::string& s) { return std::stod(s); };
    for (const auto& f : csv.rows) {
        FirmRun& run = by_id[f[c_firm]];
        run.firm_id = f[c_firm];
        run.rows.push_back({f[c_firm], Date::parse(f[c_date]), num(f[c_x0]), num(f[c_q]), num(f[c_bt]), num(f[c_b]),
                            0.0, num(f[c_dg]), num(f[c_ds]), num(f[c_bc]), num(f[c_qbc]), f[c_conv] == "1",
                            f[c_bh] == "1"});
    }
    for (const FirmSeries& s : firms) {
        auto it = by_id.find(s.firm_id);
        if (it != by_id.end()) it->second.default_date = s.default_date;
    }
    std::vector<FirmRun> out;
    for (auto& [id, run] : by_id) out.push_back(std::move(run));
    return out;
}

enum class ScoreModel { QBlackCox, BlackCox };

inline ScoreModel parse_score_model(const std::string& s) {
    if (s == "qbc") return ScoreModel::QBlackCox;
    if (s == "bc") return ScoreModel::BlackCox;
    throw std::invalid_argument("unknown score model '" + s + "' (expected qbc or bc)");
}

struct Portfolio {
    std::vector<PortfolioEntry> entries;
    std::vector<std::string> dropped;  // defaulters without a PD one horizon before default
};

/// Labeled firm-year table. A defaulter contributes one row in its default
/// year, scored by the PD `horizon_days` rows before its last observation. A
/// survivor contributes one row per year Y, scored by its last PD in Y - 1,
/// for every Y in which it is still observed.
inline Portfolio build_portfolio(std::span<const FirmRun> runs, std::size_t horizon_days,
                                 ScoreModel model = ScoreModel::QBlackCox) {
    Portfolio p;
    auto score = [model](const PdRow& r) { return model == ScoreModel::QBlackCox ? r.pd_qbc : r.pd_bc; };
    for (const auto& run : runs) {
        if (run.rows.empty()) continue;
        if (run.default_date) {
            if (run.rows.size() <= horizon_days) {
                p.dropped.push_back(run.firm_id);
                continue;
            }
            const PdRow& r = run.rows[run.rows.size() - 1 - horizon_days];
            p.entries.push_back({run.firm_id, run.default_date->year(), score(r), true});
            continue;
        }
        std::map<int, const PdRow*> last_in_year;
        for (const auto& r : run.rows) last_in_year[r.date.year()] = &r;
        for (const auto& [year, r] : last_in_year) {
            if (last_in_year.count(year + 1)) p.entries.push_back({run.firm_id, year + 1, score(*r), false});
        }
    }
    return p;
}

inline Table roc_table(const RocResult& roc) {
    Table t{{"fpr", "tpr"}, {}};
    for (const auto& pt : roc.points) t.add({pt.fpr, pt.tpr});
    return t;
}

inline Table auc_table(const AucDistribution& d) {
    Table t{{"repeat", "auc"}, {}};
    for (std::size_t i = 0; i < d.samples.size(); ++i) t.add({static_cast<std::int64_t>(i), d.samples[i]});
    return t;
}

/// Final-window q per firm in bins of `width` over [1, 3); the marker column
/// flags the bin holding q = 5/3, where the variance starts to diverge.
inline Table qhist_table(std::span<const FirmRun> runs, double width = 0.05) {
    if (!(width > 0.0) || width > 2.0) throw std::invalid_argument("qhist: bin width must lie in (0, 2]");
    const auto nbins = static_cast<std::size_t>(std::ceil(2.0 / width - 1e-9));
    std::vector<std::int64_t> def(nbins, 0), surv(nbins, 0);
    for (const auto& run : runs) {
        if (run.rows.empty()) continue;
        const double q = run.rows.back().q;
        auto b = static_cast<std::size_t>(std::clamp((q - 1.0) / width, 0.0, static_cast<double>(nbins - 1)));
        (run.default_date ? def : surv)[b] += 1;
    }
    Table t{{"bin_lo", "bin_hi", "defaulters", "non_defaulters", "marker"}, {}};
    for (std::size_t i = 0; i < nbins; ++i) {
        const double lo = 1.0 + width * static_cast<double>(i);
        const double hi = std::min(3.0, lo + width);
        const bool marker = lo <= 5.0 / 3.0 && 5.0 / 3.0 < hi;
        t.add({lo, hi, def[i], surv[i], std::string(marker ? "q=5/3" : "")});
    }
    return t;
}

/// Synthetic issuers with constant liabilities and i.i.d. q-Gaussian asset
/// returns. Thin-tailed firms start far from the barrier, fat-tailed ones
/// close to it. A firm whose log-asset path reaches the barrier is observed up
/// to the day before and carries the hitting day as its default date.
/// Paths that default within `min_history_days` are redrawn, as a sample of
/// listed firms would only hold issuers with enough history to be scored.
struct PortfolioSimSpec {
    std::size_t n_thin = 360;
    std::size_t n_fat = 40;
    std::size_t n_days = 1750;
    QGaussianParams thin{1.1, 8170.0};  // daily sd about 0.012
    QGaussianParams fat{1.85, 2500.0};
    double thin_x0 = std::log(10.0);
    double fat_x0 = std::log(1.0 / 0.7);
    double liabilities = 100.0;
    std::size_t min_history_days = 0;
    std::uint64_t seed = 1;
};

inline std::vector<FirmSeries> simulate_portfolio(const PortfolioSimSpec& s) {
    if (s.min_history_days >= s.n_days) throw std::invalid_argument("simulate_portfolio: min_history_days >= n_days");
    std::vector<FirmSeries> out;
    const auto dates = synthetic_trading_dates(kSimulationStart, s.n_days + 1);
    auto group = [&](const QGaussianParams& p, double x0, std::size_t n, std::uint64_t seed, const char* prefix) {
        std::vector<FirmPath> kept;
        for (std::uint64_t batch = 0; kept.size() < n; ++batch) {
            if (batch > 1000) throw std::runtime_error("simulate_portfolio: too few paths survive min_history_days");
            const SimConfig cfg{q_to_gamma(p), 1, s.n_days, 0.0, seed + 0x9e3779b97f4a7c15ULL * batch};
            for (auto& path : simulate_firm_paths(cfg, x0, n - kept.size())) {
                if (!path.default_day || *path.default_day > s.min_history_days) kept.push_back(std::move(path));
            }
        }
        for (std::size_t i = 0; i < kept.size(); ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "%s%04zu", prefix, i + 1);
            FirmSeries f{id, {}, {}, {}, std::nullopt};
            const std::size_t last = kept[i].default_day ? *kept[i].default_day : s.n_days + 1;
            double x = x0;
            for (std::size_t d = 0; d < last; ++d) {
                if (d > 0) x += kept[i].returns.v[d - 1];
                f.dates.push_back(dates[d]);
                f.equity.push_back(s.liabilities * std::expm1(x));
                f.liabilities_raw.push_back(s.liabilities);
            }
            if (kept[i].default_day) f.default_date = dates[*kept[i].default_day];
            out.push_back(std::move(f));
        }
    };
    group(s.fat, s.fat_x0, s.n_fat, s.seed ^ 0x5851f42d4c957f2dULL, "F");
    group(s.thin, s.thin_x0, s.n_thin, s.seed, "T");
    return out;
}

/// Market CSV in the ingestion schema, one row per firm and date.
inline Table market_table(std::span<const FirmSeries> firms) {
    Table t{{"firm_id", "date", "market_cap", "total_liabilities", "defaulted_on"}, {}};
    for (const auto& f : firms) {
        const Cell def = f.default_date ? Cell{f.default_date->iso()} : Cell{};
        for (std::size_t i = 0; i < f.size(); ++i) {
            const Cell liab = f.liabilities_raw[i] ? Cell{*f.liabilities_raw[i]} : Cell{};
            t.add({f.firm_id, f.dates[i].iso(), f.equity[i], liab, def});
        }
    }
    return t;
}

inline Table assets_table(const AssetSeries& a) {
    Table t{{"firm_id", "date", "V", "D", "v"}, {}};
    for (std::size_t i = 0; i < a.V.size(); ++i) {
        const Cell v = i == 0 ? Cell{} : Cell{std::log(a.V[i] / a.V[i - 1])};
        t.add({a.firm_id, a.dates[i].iso(), a.V[i], a.D[i], v});
    }
    return t;
}

}  // namespace qgd
