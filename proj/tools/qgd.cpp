// qgd: command-line driver for the q-Gaussian default-risk toolkit.
//
// Stages share a run directory (--out-dir). `ingest` writes store.csv, `pd`
// writes pd.csv; later stages read those back.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qgdefault/pipeline.hpp"

namespace fs = std::filesystem;
using namespace qgd;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kUsage = 2;

// Raised for problems the caller can fix: bad flags, missing stage outputs.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
};

RunConfig load_config(const Globals& g) {
    RunConfig cfg;
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) throw UsageError("cannot open config file " + g.config_path);
        cfg = parse_config(in);
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    if (g.format) cfg.format = parse_format(*g.format);
    return cfg;
}

fs::path stage_file(const RunConfig& cfg, const std::string& name) { return fs::path(cfg.out_dir) / name; }

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

// Writes name.csv or name.jsonl per the configured format.
fs::path emit(const RunConfig& cfg, const std::string& name, const Table& t) {
    const fs::path p = stage_file(cfg, name + (cfg.format == OutputFormat::Csv ? ".csv" : ".jsonl"));
    write_file(p, to_string(t, cfg.format));
    return p;
}

std::vector<FirmSeries> load_store(const RunConfig& cfg) {
    const fs::path p = stage_file(cfg, "store.csv");
    std::ifstream in(p);
    if (!in) throw UsageError("no firm store at " + p.string() + "; run `qgd ingest <files>` first");
    auto res = read_market_csv(in);
    if (!res.report.rejects.empty()) throw UsageError(p.string() + " is corrupt; re-run `qgd ingest`");
    return std::move(res.firms);
}

std::vector<FirmRun> load_pd(const RunConfig& cfg, const std::vector<FirmSeries>& firms) {
    const fs::path p = stage_file(cfg, "pd.csv");
    std::ifstream in(p);
    if (!in) throw UsageError("no PD table at " + p.string() + "; run `qgd pd` first");
    return read_pd_table(in, firms);
}

const FirmSeries& find_firm(const std::vector<FirmSeries>& firms, const std::string& id) {
    for (const auto& f : firms) {
        if (f.firm_id == id) return f;
    }
    throw UsageError("firm '" + id + "' not in the store");
}

int report_failures(const RunConfig& cfg, const std::vector<FirmRun>& runs) {
    const Table fails = failures_table(runs);
    if (fails.rows.empty()) return kOk;
    emit(cfg, "failures", fails);
    for (const auto& r : fails.rows) {
        std::cerr << "firm " << std::get<std::string>(r[0]) << ": " << std::get<std::string>(r[1]) << "\n";
    }
    return kPartial;
}

int cmd_ingest(const RunConfig& cfg, std::vector<std::string> files) {
    if (files.empty()) files = cfg.inputs;
    if (files.empty()) throw UsageError("ingest: no input files (pass paths or set `inputs` in the config)");
    std::vector<FirmSeries> firms;
    Table report{{"file", "line", "message"}, {}};
    std::size_t rows = 0, accepted = 0;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw UsageError("ingest: cannot open " + path);
        IngestResult res = read_market_csv(in);
        rows += res.report.rows;
        accepted += res.report.accepted;
        for (const auto& e : res.report.rejects) {
            report.add({path, static_cast<std::int64_t>(e.line), e.message});
            std::cerr << path << ":" << e.line << ": " << e.message << "\n";
        }
        for (const auto& g : res.report.gaps) std::cerr << path << ": gap " << g << "\n";
        for (auto& f : res.firms) {
            for (const auto& have : firms) {
                if (have.firm_id == f.firm_id) throw UsageError("ingest: firm " + f.firm_id + " appears in more than one file");
            }
            firms.push_back(std::move(f));
        }
    }
    std::sort(firms.begin(), firms.end(), [](const auto& a, const auto& b) { return a.firm_id < b.firm_id; });
    write_file(stage_file(cfg, "store.csv"), to_string(market_table(firms), OutputFormat::Csv));
    emit(cfg, "ingest_rejects", report);
    std::printf("ingested %zu firms, %zu of %zu rows accepted, %zu rejected\n", firms.size(), accepted, rows,
                report.rows.size());
    return report.rows.empty() ? kOk : kUsage;
}

int cmd_assets(const RunConfig& cfg) {
    const auto firms = load_store(cfg);
    Table all{{"firm_id", "date", "V", "D", "v"}, {}};
    std::vector<FirmRun> status;
    for (const auto& f : firms) {
        FirmRun run{f.firm_id, f.default_date, {}, {}};
        try {
            const Table t = assets_table(build_assets(f, cfg));
            for (const auto& r : t.rows) all.rows.push_back(r);
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        status.push_back(std::move(run));
    }
    const fs::path p = emit(cfg, "assets", all);
    std::printf("asset values (%s, %s) for %zu firms -> %s\n", to_string(cfg.method), to_string(cfg.dp_policy),
                firms.size(), p.c_str());
    return report_failures(cfg, status);
}

int cmd_fit(const RunConfig& cfg) {
    const auto firms = load_store(cfg);
    const auto runs = run_pipeline(firms, cfg);
    const fs::path p = emit(cfg, "fits", fits_table(runs));
    std::printf("rolling %zu-day fits for %zu firms -> %s\n", cfg.window, firms.size(), p.c_str());
    return report_failures(cfg, runs);
}

struct DirectPd {
    std::optional<double> q, beta_tilde, x0;
};

int cmd_pd(const RunConfig& cfg, const DirectPd& d) {
    if (d.q || d.beta_tilde || d.x0) {
        if (!d.q || !d.beta_tilde || !d.x0) throw UsageError("pd: direct mode needs --q, --beta-tilde and --x0");
        const QGaussianParams p{*d.q, *d.beta_tilde};
        const double T = static_cast<double>(cfg.horizon_days);
        const auto far = p.is_gaussian() ? std::nullopt : std::optional(qblackcox_asymptotic_far(p, *d.x0, T));
        const auto near = qblackcox_asymptotic_near(p, *d.x0, T);
        Table t{{"q", "beta_tilde", "x0", "horizon_days", "dtd_generalized", "pd_qmerton", "pd_qbc", "far_asymptote",
                 "near_asymptote"},
                {}};
        t.add({p.q, p.beta_tilde, *d.x0, static_cast<std::int64_t>(cfg.horizon_days),
               generalized_dtd(*d.x0, p.beta_tilde, T), qmerton_pd(p, *d.x0, T), qblackcox_pd(p, *d.x0, T).pd,
               far ? Cell{far->value} : Cell{}, near.value});
        write_table(std::cout, t, cfg.format);
        return kOk;
    }
    const auto firms = load_store(cfg);
    const auto runs = run_pipeline(firms, cfg);
    const Table t = pd_table(runs);
    write_file(stage_file(cfg, "pd.csv"), to_string(t, OutputFormat::Csv));
    if (cfg.format == OutputFormat::Json) emit(cfg, "pd", t);
    emit(cfg, "fits", fits_table(runs));
    std::printf("PD table for %zu firms (%zu rows) -> %s\n", firms.size(), t.rows.size(),
                stage_file(cfg, "pd.csv").c_str());
    return report_failures(cfg, runs);
}

int cmd_dtd(const RunConfig& cfg) {
    const auto firms = load_store(cfg);
    const auto runs = load_pd(cfg, firms);
    Table t{{"firm_id", "date", "x0", "dtd_generalized", "dtd_simple"}, {}};
    for (const auto& run : runs) {
        for (const auto& r : run.rows) t.add({r.firm_id, r.date.iso(), r.x0, r.dtd_generalized, r.dtd_simple});
    }
    const fs::path p = emit(cfg, "dtd", t);
    std::printf("distances to default (%zu rows) -> %s\n", t.rows.size(), p.c_str());
    return kOk;
}

std::vector<std::pair<std::string, ReturnSeries>> returns_for(const RunConfig& cfg, const std::string& firm) {
    const auto firms = load_store(cfg);
    std::vector<std::pair<std::string, ReturnSeries>> out;
    for (const auto& f : firms) {
        if (!firm.empty() && f.firm_id != firm) continue;
        out.emplace_back(f.firm_id, log_returns(build_assets(f, cfg)));
    }
    if (!firm.empty() && out.empty()) find_firm(firms, firm);
    return out;
}

int cmd_acf(const RunConfig& cfg, const std::string& firm, const std::string& transform, int max_lag) {
    AcfTransform tr;
    if (transform == "abs") {
        tr = AcfTransform::AbsReturn;
    } else if (transform == "squared") {
        tr = AcfTransform::SquaredReturn;
    } else if (transform == "raw") {
        tr = AcfTransform::RawReturn;
    } else {
        throw UsageError("acf: unknown transform '" + transform + "' (abs, squared or raw)");
    }
    Table t{{"firm_id", "transform", "lag", "acf"}, {}};
    std::vector<FirmRun> status;
    for (const auto& [id, r] : returns_for(cfg, firm)) {
        FirmRun run{id, std::nullopt, {}, {}};
        try {
            const AcfResult a = acf(r.v, tr, max_lag);
            for (std::size_t i = 0; i < a.lags.size(); ++i) {
                t.add({id, std::string(to_string(tr)), static_cast<std::int64_t>(a.lags[i]), a.values[i]});
            }
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        status.push_back(std::move(run));
    }
    const fs::path p = emit(cfg, "acf", t);
    std::printf("ACF of %s returns up to lag %d -> %s\n", to_string(tr), max_lag, p.c_str());
    return report_failures(cfg, status);
}

int cmd_qq(const RunConfig& cfg, const std::string& firm, const std::string& law_name) {
    if (law_name != "q" && law_name != "gauss") throw UsageError("qq: --law must be q or gauss");
    Table t{{"firm_id", "law", "theoretical", "empirical"}, {}};
    std::vector<FirmRun> status;
    for (const auto& [id, r] : returns_for(cfg, firm)) {
        FirmRun run{id, std::nullopt, {}, {}};
        try {
            if (r.size() < cfg.window) throw std::invalid_argument("fewer returns than one window");
            const std::span<const double> w = std::span<const double>(r.v).last(cfg.window);
            const FitResult fit = law_name == "q" ? fit_qgaussian_mle(w) : fit_gaussian_mle(w);
            for (const auto& pt : qq_pairs(w, fit.law())) t.add({id, law_name, pt.theoretical, pt.empirical});
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        status.push_back(std::move(run));
    }
    const fs::path p = emit(cfg, "qq", t);
    std::printf("Q-Q pairs of the last %zu-day window -> %s\n", cfg.window, p.c_str());
    return report_failures(cfg, status);
}

int cmd_qhist(const RunConfig& cfg, double width) {
    const auto firms = load_store(cfg);
    const auto runs = load_pd(cfg, firms);
    const fs::path p = emit(cfg, "qhist", qhist_table(runs, width));
    std::printf("final-window q histogram -> %s\n", p.c_str());
    return kOk;
}

int cmd_roc(const RunConfig& cfg, int repeats, const std::string& model) {
    const auto firms = load_store(cfg);
    const auto runs = load_pd(cfg, firms);
    const Portfolio pf = build_portfolio(runs, cfg.horizon_days, parse_score_model(model));
    for (const auto& id : pf.dropped) {
        std::cerr << "firm " << id << ": no PD " << cfg.horizon_days << " days before default, left out\n";
    }
    std::vector<double> scores;
    std::vector<bool> labels;
    Table entries{{"firm_id", "year", "score", "defaulted"}, {}};
    for (const auto& e : pf.entries) {
        scores.push_back(e.score);
        labels.push_back(e.defaulted);
        entries.add({e.firm_id, static_cast<std::int64_t>(e.year), e.score, e.defaulted});
    }
    emit(cfg, "portfolio", entries);
    const RocResult roc = roc_curve(scores, labels);
    emit(cfg, "roc", roc_table(roc));
    const AucDistribution d = resampled_auc(pf.entries, repeats, cfg.seed);
    emit(cfg, "auc", auc_table(d));
    std::printf("AUC (all firm-years) %.4f; balanced resamples: mean %.4f sd %.4f over %d repeats\n", roc.auc, d.mean,
                d.stddev, repeats);
    return kOk;
}

struct SimArgs {
    std::string kind = "portfolio";
    std::size_t n_thin = 360, n_fat = 40, days = 1750, min_history = 0;
    double a = 2.0, b = 2.0 / 0.0002, drift = 0.0;
    std::uint64_t tau = 50;
};

int cmd_simulate(const RunConfig& cfg, const SimArgs& s) {
    if (s.kind == "portfolio") {
        PortfolioSimSpec spec;
        spec.n_thin = s.n_thin;
        spec.n_fat = s.n_fat;
        spec.n_days = s.days;
        spec.min_history_days = s.min_history;
        spec.seed = cfg.seed;
        const auto firms = simulate_portfolio(spec);
        const fs::path p = stage_file(cfg, "simulated.csv");
        write_file(p, to_string(market_table(firms), OutputFormat::Csv));
        std::size_t defaults = 0;
        for (const auto& f : firms) defaults += f.default_date ? 1 : 0;
        std::printf("simulated %zu firms (%zu defaults) -> %s; ingest it with `qgd ingest %s`\n", firms.size(),
                    defaults, p.c_str(), p.c_str());
        return kOk;
    }
    if (s.kind == "superstat") {
        const SimConfig sc{{s.a, s.b}, s.tau, s.days, s.drift, cfg.seed};
        const ReturnSeries r = simulate_superstat(sc);
        Table t{{"date", "v"}, {}};
        for (std::size_t i = 0; i < r.size(); ++i) t.add({r.dates[i].iso(), r.v[i]});
        const fs::path p = emit(cfg, "superstat", t);
        std::printf("%zu superstatistical returns -> %s\n", r.size(), p.c_str());
        return kOk;
    }
    throw UsageError("simulate: --kind must be portfolio or superstat");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"q-Gaussian structural default-risk toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "flat key = value run configuration");
    app.add_option("--seed", g.seed, "random seed (overrides config)");
    app.add_option("--out-dir", g.out_dir, "run directory (overrides config)");
    app.add_option("--format", g.format, "output format: csv or json")->check(CLI::IsMember({"csv", "json"}));

    std::vector<std::string> files;
    auto* ingest = app.add_subcommand("ingest", "validate market CSVs and build the firm store");
    ingest->add_option("files", files, "market CSV files");

    std::optional<std::string> method, policy;
    std::optional<std::size_t> window, horizon;
    auto add_run_flags = [&](CLI::App* c) {
        c->add_option("--method", method, "asset values: proxy or implied")->check(CLI::IsMember({"proxy", "implied"}));
        c->add_option("--dp-policy", policy, "default point: total or total80")
            ->check(CLI::IsMember({"total", "total80"}));
        c->add_option("--window", window, "rolling window in trading days");
        c->add_option("--horizon-days", horizon, "PD horizon in trading days");
    };
    auto* assets = app.add_subcommand("assets", "asset values and log returns per firm");
    auto* fit = app.add_subcommand("fit", "rolling q-Gaussian fits");
    auto* pd = app.add_subcommand("pd", "rolling fits, DTDs and 1-year PDs (or one PD with --q/--beta-tilde/--x0)");
    DirectPd direct;
    pd->add_option("--q", direct.q, "entropic parameter for a direct PD");
    pd->add_option("--beta-tilde", direct.beta_tilde, "q-Gaussian scale per day for a direct PD");
    pd->add_option("--x0", direct.x0, "ln(V/D) for a direct PD");
    auto* dtd = app.add_subcommand("dtd", "generalized and simple distances to default from the PD table");
    std::string firm, transform = "abs", law = "q";
    int max_lag = 100;
    auto* acf_cmd = app.add_subcommand("acf", "autocorrelation of transformed returns");
    acf_cmd->add_option("--firm", firm, "restrict to one firm");
    acf_cmd->add_option("--transform", transform, "abs, squared or raw");
    acf_cmd->add_option("--max-lag", max_lag, "largest lag in trading days");
    auto* qq = app.add_subcommand("qq", "Q-Q pairs of the last window against a fitted law");
    qq->add_option("--firm", firm, "restrict to one firm");
    qq->add_option("--law", law, "q or gauss");
    double width = 0.05;
    auto* qhist = app.add_subcommand("qhist", "histogram of final-window q per firm");
    qhist->add_option("--bin-width", width, "bin width in q");
    int repeats = 100;
    std::string model = "qbc";
    auto* roc = app.add_subcommand("roc", "ROC curve and resampled AUC of the PD table");
    roc->add_option("--repeats", repeats, "balanced resamples");
    roc->add_option("--model", model, "score: qbc or bc")->check(CLI::IsMember({"qbc", "bc"}));
    SimArgs sim;
    auto* simulate = app.add_subcommand("simulate", "synthetic portfolio (market CSV) or superstatistical returns");
    simulate->add_option("--kind", sim.kind, "portfolio or superstat");
    simulate->add_option("--n-thin", sim.n_thin, "thin-tailed solvent firms");
    simulate->add_option("--n-fat", sim.n_fat, "fat-tailed leveraged firms");
    simulate->add_option("--days", sim.days, "trading days per path");
    simulate->add_option("--min-history", sim.min_history, "redraw paths defaulting within this many days");
    simulate->add_option("--a", sim.a, "Gamma shape of the precision (superstat)");
    simulate->add_option("--b", sim.b, "Gamma rate of the precision (superstat)");
    simulate->add_option("--tau", sim.tau, "mean regime length in days (superstat)");
    simulate->add_option("--drift", sim.drift, "daily drift (superstat)");
    for (auto* c : {assets, fit, pd, dtd, acf_cmd, qq, qhist, roc}) add_run_flags(c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        RunConfig cfg = load_config(g);
        if (method) cfg.method = parse_method(*method);
        if (policy) cfg.dp_policy = parse_policy(*policy);
        if (window) cfg.window = *window;
        if (horizon) cfg.horizon_days = *horizon;
        validate(cfg);
        if (*ingest) return cmd_ingest(cfg, files);
        if (*assets) return cmd_assets(cfg);
        if (*fit) return cmd_fit(cfg);
        if (*pd) return cmd_pd(cfg, direct);
        if (*dtd) return cmd_dtd(cfg);
        if (*acf_cmd) return cmd_acf(cfg, firm, transform, max_lag);
        if (*qq) return cmd_qq(cfg, firm, law);
        if (*qhist) return cmd_qhist(cfg, width);
        if (*roc) return cmd_roc(cfg, repeats, model);
        if (*simulate) return cmd_simulate(cfg, sim);
    } catch (const UsageError& e) {
        std::cerr << "qgd: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "qgd: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "qgd: " << e.what() << "\n";
        return kPartial;
    }
    return kUsage;
}
