#pragma once

// Market-data ingestion and asset-value construction.
//
// Input rows are `firm_id,date,market_cap,total_liabilities[,defaulted_on]`
// with ISO dates. Liabilities are book values reported quarterly: they may
// repeat between reports or be left blank, and are linearly interpolated on
// calendar days between report dates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qgdefault/dist.hpp"
#include "qgdefault/numeric.hpp"
#include "qgdefault/specfun.hpp"

namespace qgd {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

    static Date from_ymd(int y, unsigned m, unsigned d) {
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
        return Date(static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count()));
    }

    /// Parses YYYY-MM-DD.
    static Date parse(std::string_view s) {
        auto digits = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            for (std::size_t i = pos; i < pos + len; ++i) {
                if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad date '" + std::string(s) + "'");
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
            throw std::invalid_argument("bad date '" + std::string(s) + "', expected YYYY-MM-DD");
        }
        const int y = digits(0, 4);
        const int m = digits(5, 2);
        const int d = digits(8, 2);
        try {
            return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("bad date '" + std::string(s) + "'");
        }
    }

    [[nodiscard]] std::chrono::year_month_day ymd() const {
        return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days_}}};
    }
    [[nodiscard]] int year() const { return static_cast<int>(ymd().year()); }
    [[nodiscard]] bool is_weekday() const {
        const std::chrono::weekday w{std::chrono::sys_days{std::chrono::days{days_}}};
        return w != std::chrono::Saturday && w != std::chrono::Sunday;
    }
    [[nodiscard]] std::string iso() const {
        const auto d = ymd();
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                      static_cast<unsigned>(d.day()));
        return buf;
    }
    [[nodiscard]] constexpr std::int32_t days() const { return days_; }
    [[nodiscard]] Date plus_days(std::int32_t n) const { return Date(days_ + n); }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

/// Consecutive weekdays starting at (or after) `start`.
inline std::vector<Date> synthetic_trading_dates(Date start, std::size_t n) {
    std::vector<Date> out;
    out.reserve(n);
    Date d = start;
    while (out.size() < n) {
        if (d.is_weekday()) out.push_back(d);
        d = d.plus_days(1);
    }
    return out;
}

/// Raw equity and liability history of one issuer.
struct FirmSeries {
    std::string firm_id;
    std::vector<Date> dates;
    std::vector<double> equity;                          // market capitalization E
    std::vector<std::optional<double>> liabilities_raw;  // book total liabilities, blank between reports
    std::optional<Date> default_date;

    [[nodiscard]] std::size_t size() const { return dates.size(); }
};

inline void validate(const FirmSeries& f) {
    const std::size_t n = f.dates.size();
    if (f.equity.size() != n || f.liabilities_raw.size() != n) {
        throw std::invalid_argument("FirmSeries " + f.firm_id + ": column lengths differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && !(f.dates[i - 1] < f.dates[i])) {
            throw std::invalid_argument("FirmSeries " + f.firm_id + ": dates not strictly increasing at " +
                                        f.dates[i].iso());
        }
        if (!(f.equity[i] > 0.0) || !std::isfinite(f.equity[i])) {
            throw std::invalid_argument("FirmSeries " + f.firm_id + ": nonpositive market cap on " + f.dates[i].iso());
        }
        if (f.liabilities_raw[i] && !(*f.liabilities_raw[i] >= 0.0)) {
            throw std::invalid_argument("FirmSeries " + f.firm_id + ": negative liabilities on " + f.dates[i].iso());
        }
    }
}

enum class DefaultPointPolicy { TotalLiabilities, Liabilities80 };
enum class AssetMethod { DirectProxy, IterativeImplied };

inline const char* to_string(DefaultPointPolicy p) {
    return p == DefaultPointPolicy::TotalLiabilities ? "total" : "total80";
}
inline const char* to_string(AssetMethod m) { return m == AssetMethod::DirectProxy ? "proxy" : "implied"; }

inline double default_point(double liabilities, DefaultPointPolicy policy) {
    if (!(liabilities > 0.0)) throw std::domain_error("default_point: firm without debt has no default point");
    return policy == DefaultPointPolicy::TotalLiabilities ? liabilities : 0.8 * liabilities;
}

struct AssetSeries {
    std::string firm_id;
    std::vector<Date> dates;
    std::vector<double> V;  // market value of assets
    std::vector<double> D;  // default point; 0 for a firm without debt
    AssetMethod method = AssetMethod::DirectProxy;
    DefaultPointPolicy dp_policy = DefaultPointPolicy::TotalLiabilities;
};

struct ReturnSeries {
    std::string firm_id;
    std::vector<Date> dates;  // date of the later observation of each pair
    std::vector<double> v;

    [[nodiscard]] std::size_t size() const { return v.size(); }
};

/// Daily liabilities, piecewise linear between report dates and flat outside
/// them. A report is a non-blank value that starts a new run: the first
/// value, a value after a blank, or a change from the previous row.
inline std::vector<double> interpolate_liabilities(const FirmSeries& f) {
    std::vector<std::pair<Date, double>> knots;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.liabilities_raw[i]) continue;
        const double v = *f.liabilities_raw[i];
        const bool new_report = knots.empty() || i == 0 || !f.liabilities_raw[i - 1] || *f.liabilities_raw[i - 1] != v;
        if (new_report) knots.emplace_back(f.dates[i], v);
    }
    if (knots.empty()) throw std::invalid_argument("interpolate_liabilities: no liability observations for " + f.firm_id);
    std::vector<double> out(f.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Date d = f.dates[i];
        while (k + 1 < knots.size() && knots[k + 1].first <= d) ++k;
        if (d <= knots.front().first) {
            out[i] = knots.front().second;
        } else if (k + 1 >= knots.size()) {
            out[i] = knots.back().second;
        } else {
            const auto [d0, v0] = knots[k];
            const auto [d1, v1] = knots[k + 1];
            const double w = static_cast<double>(d.days() - d0.days()) / static_cast<double>(d1.days() - d0.days());
            out[i] = v0 + w * (v1 - v0);
        }
    }
    return out;
}

namespace detail {

inline std::vector<double> scaled_default_points(const std::vector<double>& liabilities, DefaultPointPolicy policy) {
    std::vector<double> out(liabilities.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = liabilities[i] > 0.0 ? default_point(liabilities[i], policy) : 0.0;
    }
    return out;
}

}  // namespace detail

/// V = E + D with the full interpolated liabilities; the policy only sets the
/// default point stored alongside.
inline AssetSeries direct_proxy_assets(const FirmSeries& f, DefaultPointPolicy policy) {
    validate(f);
    const std::vector<double> liab = interpolate_liabilities(f);
    AssetSeries a{f.firm_id, f.dates, std::vector<double>(f.size()), detail::scaled_default_points(liab, policy),
                  AssetMethod::DirectProxy, policy};
    for (std::size_t i = 0; i < f.size(); ++i) a.V[i] = f.equity[i] + liab[i];
    return a;
}

/// Black-Scholes value of equity as a call on assets V with strike D.
/// r and sigma are annual, T in years.
inline double equity_call_value(double V, double D, double r, double sigma, double T) {
    const double disc = D * std::exp(-r * T);
    if (D <= 0.0) return V;
    const double vol = sigma * std::sqrt(T);
    if (vol < 1e-12) return std::fmax(V - disc, 0.0);
    const double d1 = (std::log(V / D) + (r + 0.5 * sigma * sigma) * T) / vol;
    const double d2 = d1 - vol;
    return V * specfun::normal_cdf(d1) - disc * specfun::normal_cdf(d2);
}

/// Annualized sample volatility of daily log changes.
inline double annualized_log_volatility(std::span<const double> values) {
    if (values.size() < 3) throw std::invalid_argument("annualized_log_volatility: need at least 3 values");
    std::vector<double> r(values.size() - 1);
    for (std::size_t i = 1; i < values.size(); ++i) r[i - 1] = std::log(values[i] / values[i - 1]);
    const double m = numeric::mean(r);
    double ss = 0.0;
    for (double x : r) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(r.size() - 1) * kTradingDaysPerYear);
}

struct ImpliedAssetsOptions {
    double risk_free = 0.02;    // per year
    double option_years = 1.0;  // maturity of the equity call
    DefaultPointPolicy policy = DefaultPointPolicy::TotalLiabilities;
    double tol = 1e-6;  // max relative change of V between sweeps
    int max_sweeps = 50;
};

struct ImpliedAssetsResult {
    AssetSeries assets;
    int sweeps = 0;
    double asset_volatility = 0.0;  // annualized, at the fixed point
};

/// Thrown when the implied-asset iteration hits its sweep cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> last)
        : std::runtime_error(what), last_iterate(std::move(last)) {}
    std::vector<double> last_iterate;
};

/// Fixed-point inversion of the equity call: start from V = E + D, estimate the
/// asset volatility from the current V path, re-solve every day for V, repeat.
inline ImpliedAssetsResult implied_assets_detailed(const FirmSeries& f, const ImpliedAssetsOptions& opt = {}) {
    validate(f);
    if (f.size() < 2) throw std::invalid_argument("implied_assets: need at least 2 observations");
    if (!(opt.option_years > 0.0)) throw std::domain_error("implied_assets: option horizon must be positive");
    const std::vector<double> liab = interpolate_liabilities(f);
    const std::size_t n = f.size();
    std::vector<double> V(n);
    for (std::size_t i = 0; i < n; ++i) V[i] = f.equity[i] + liab[i];

    ImpliedAssetsResult res{{f.firm_id, f.dates, {}, detail::scaled_default_points(liab, opt.policy),
                             AssetMethod::IterativeImplied, opt.policy},
                            0,
                            0.0};
    const bool debt_free = std::all_of(liab.begin(), liab.end(), [](double d) { return d <= 0.0; });
    if (debt_free) {
        res.assets.V = f.equity;
        res.sweeps = 1;
        res.asset_volatility = n >= 3 ? annualized_log_volatility(res.assets.V) : 0.0;
        return res;
    }
    const double T = opt.option_years;
    const double growth = std::exp(-opt.risk_free * T);
    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        const double sigma = n >= 3 ? annualized_log_volatility(V) : 0.0;
        double max_change = 0.0;
        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double E = f.equity[i];
            const double D = liab[i];
            if (D <= 0.0) {
                next[i] = E;
            } else {
                // E <= C(V) <= V and C(V) >= V - D e^{-rT} bracket the root.
                const double lo = E;
                const double hi = E + D * growth;
                auto excess = [&](double x) { return equity_call_value(x, D, opt.risk_free, sigma, T) - E; };
                if (excess(lo) > 1e-9 * E || excess(hi) < -1e-9 * E) {
                    throw std::runtime_error("implied_assets: cannot bracket asset value for " + f.firm_id + " on " +
                                             f.dates[i].iso());
                }
                if (excess(lo) >= 0.0) {
                    next[i] = lo;
                } else if (excess(hi) <= 0.0) {
                    next[i] = hi;  // deterministic payoff, zero volatility
                } else {
                    next[i] = numeric::bisect(excess, lo, hi, 1e-14 * hi);
                }
            }
            max_change = std::fmax(max_change, std::fabs(next[i] - V[i]) / V[i]);
        }
        V.swap(next);
        if (max_change < opt.tol) {
            res.assets.V = std::move(V);
            res.sweeps = sweep;
            res.asset_volatility = n >= 3 ? annualized_log_volatility(res.assets.V) : 0.0;
            return res;
        }
    }
    throw ConvergenceError("implied_assets: no convergence for " + f.firm_id, V);
}

inline AssetSeries implied_assets(const FirmSeries& f, double risk_free = 0.02, double option_years = 1.0,
                                  DefaultPointPolicy policy = DefaultPointPolicy::TotalLiabilities,
                                  double tol = 1e-6) {
    return implied_assets_detailed(f, {risk_free, option_years, policy, tol, 50}).assets;
}

inline ReturnSeries log_returns(const AssetSeries& a) {
    if (a.V.size() < 2) throw std::invalid_argument("log_returns: need at least 2 observations");
    ReturnSeries r{a.firm_id, {}, {}};
    r.dates.reserve(a.V.size() - 1);
    r.v.reserve(a.V.size() - 1);
    for (std::size_t i = 0; i < a.V.size(); ++i) {
        if (!(a.V[i] > 0.0) || !std::isfinite(a.V[i])) {
            throw std::domain_error("log_returns: nonpositive asset value for " + a.firm_id);
        }
        if (i == 0) continue;
        r.dates.push_back(a.dates[i]);
        r.v.push_back(std::log(a.V[i] / a.V[i - 1]));
    }
    return r;
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct RowError {
    std::size_t line;
    std::string message;
};

struct IngestReport {
    std::size_t rows = 0;
    std::size_t accepted = 0;
    std::vector<RowError> rejects;
    std::vector<std::string> gaps;  // firms with blank-liability runs or calendar gaps > 7 days
};

struct IngestResult {
    std::vector<FirmSeries> firms;  // sorted by firm_id
    IngestReport report;
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::string_view f = line.substr(start, i - start);
            while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
            while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
            out.push_back(f);
            start = i + 1;
        }
    }
    return out;
}

inline double parse_number(std::string_view s, const char* what) {
    std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + tmp + "'");
    }
    return v;
}

}  // namespace detail

/// Reads a long-format market file. Rows failing validation are rejected
/// with their line number; accepted rows are grouped per firm and sorted by date.
inline IngestResult read_market_csv(std::istream& in, std::size_t line_offset = 0) {
    IngestResult res;
    std::string line;
    std::size_t lineno = line_offset;
    int col_firm = -1, col_date = -1, col_cap = -1, col_liab = -1, col_def = -1;
    bool have_header = false;

    struct Row {
        Date date;
        double cap;
        std::optional<double> liab;
        std::optional<Date> defaulted;
        std::size_t line;
    };
    std::map<std::string, std::vector<Row>> by_firm;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto fields = detail::split_csv(line);
        if (!have_header) {
            for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
                const auto& h = fields[static_cast<std::size_t>(i)];
                if (h == "firm_id") col_firm = i;
                else if (h == "date") col_date = i;
                else if (h == "market_cap") col_cap = i;
                else if (h == "total_liabilities") col_liab = i;
                else if (h == "defaulted_on") col_def = i;
            }
            if (col_firm < 0 || col_date < 0 || col_cap < 0 || col_liab < 0) {
                throw std::invalid_argument(
                    "market csv: header must contain firm_id,date,market_cap,total_liabilities");
            }
            have_header = true;
            continue;
        }
        ++res.report.rows;
        try {
            const int needed = std::max({col_firm, col_date, col_cap, col_liab}) + 1;
            if (static_cast<int>(fields.size()) < needed) {
                throw std::invalid_argument("expected " + std::to_string(needed) + " fields, got " +
                                            std::to_string(fields.size()));
            }
            auto field = [&](int c) -> std::string_view {
                return c >= 0 && c < static_cast<int>(fields.size()) ? fields[static_cast<std::size_t>(c)]
                                                                     : std::string_view{};
            };
            const std::string firm(field(col_firm));
            if (firm.empty()) throw std::invalid_argument("empty firm_id");
            Row r{Date::parse(field(col_date)), detail::parse_number(field(col_cap), "market_cap"), std::nullopt,
                  std::nullopt, lineno};
            if (!(r.cap > 0.0)) throw std::invalid_argument("market_cap must be positive");
            if (!field(col_liab).empty()) {
                const double l = detail::parse_number(field(col_liab), "total_liabilities");
                if (l < 0.0) throw std::invalid_argument("total_liabilities must be nonnegative");
                r.liab = l;
            }
            if (!field(col_def).empty()) r.defaulted = Date::parse(field(col_def));
            by_firm[firm].push_back(r);
        } catch (const std::exception& e) {
            res.report.rejects.push_back({lineno, e.what()});
        }
    }
    if (!have_header) throw std::invalid_argument("market csv: missing header");

    for (auto& [firm, rows] : by_firm) {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
        FirmSeries f{firm, {}, {}, {}, std::nullopt};
        bool firm_ok = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && rows[i].date == rows[i - 1].date) {
                res.report.rejects.push_back(
                    {rows[i].line, "duplicate (firm, date) pair (" + firm + ", " + rows[i].date.iso() + ")"});
                continue;
            }
            if (rows[i].defaulted) {
                if (f.default_date && *f.default_date != *rows[i].defaulted) {
                    res.report.rejects.push_back({rows[i].line, "conflicting defaulted_on for " + firm});
                    firm_ok = false;
                    continue;
                }
                f.default_date = rows[i].defaulted;
            }
            f.dates.push_back(rows[i].date);
            f.equity.push_back(rows[i].cap);
            f.liabilities_raw.push_back(rows[i].liab);
        }
        if (!firm_ok || f.dates.empty()) continue;
        if (std::none_of(f.liabilities_raw.begin(), f.liabilities_raw.end(), [](const auto& x) { return x.has_value(); })) {
            res.report.rejects.push_back({rows.front().line, "no liability observations for " + firm});
            continue;
        }
        for (std::size_t i = 1; i < f.dates.size(); ++i) {
            if (f.dates[i].days() - f.dates[i - 1].days() > 7) {
                res.report.gaps.push_back(firm + ": " + f.dates[i - 1].iso() + " to " + f.dates[i].iso());
            }
        }
        res.report.accepted += f.dates.size();
        res.firms.push_back(std::move(f));
    }
    return res;
}

inline IngestResult read_market_csv(const std::string& text) {
    std::istringstream in(text);
    return read_market_csv(in);
}

}  // namespace qgd
