// Command-line front end: data ingestion, configuration, and orchestration of
// every analysis in the library. Exit codes: 0 success, 2 config error,
// 3 data error, 4 numeric failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "robustbp/asymptotics.hpp"
#include "robustbp/bootstrap.hpp"
#include "robustbp/csv.hpp"
#include "robustbp/oracle.hpp"
#include "robustbp/replicate.hpp"
#include "robustbp/tests.hpp"

using namespace robustbp;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string input, input2, col, group_col;
    bool mad_normalize = false;
    std::string loss = "huber";
    double delta = 1.345;
    double efficiency = 0.0;  // when > 0, overrides delta
    std::string deriv_convention = "indicator";
    double alpha = 0.05;
    std::string side = "both";
    std::string format = "csv";
    std::string out;
    std::uint64_t seed = 1;
    int threads = 1;
    bool use_a_grid = false;
};

ScoreFamily make_score(const GlobalOpts& g) {
    const DerivConvention conv = g.deriv_convention == "delta_scaled"
                                     ? DerivConvention::delta_scaled
                                     : DerivConvention::indicator;
    double delta = g.delta;
    if (g.efficiency > 0.0) {
        ScoreKind kind = ScoreKind::huber;
        if (g.loss == "logcosh") kind = ScoreKind::logcosh;
        if (g.loss == "selfconcordant") kind = ScoreKind::self_concordant;
        delta = tune_for_efficiency(kind, g.efficiency, PopulationModel::normal());
    }
    return make_score_by_name(g.loss, delta, conv);
}

Side side_of(const std::string& s) {
    if (s == "plus") return Side::plus;
    if (s == "minus") return Side::minus;
    return Side::two_sided;
}

std::string side_name(Side s) {
    return s == Side::plus ? "plus" : (s == Side::minus ? "minus" : "both");
}

void write_output(const GlobalOpts& g, const std::string& text) {
    if (g.out.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(g.out, std::ios::binary);
    if (!out) throw DataError("cannot write output file: " + g.out);
    out << text;
}

IngestResult load_data(const GlobalOpts& g, bool allow_two = true) {
    if (g.input.empty()) throw CLI::ValidationError("--input is required");
    ColumnSpec spec;
    spec.value_col = g.col;
    spec.group_col = g.group_col;
    spec.mad_normalize = g.mad_normalize;
    IngestResult res = ingest_csv(g.input, spec);
    if (!g.input2.empty()) {
        if (res.y) throw DataError("both --input2 and --group-col provided");
        ColumnSpec spec2 = spec;
        spec2.group_col.clear();
        res.y = ingest_csv(g.input2, spec2).x;
    }
    if (res.y && !allow_two) throw DataError("this command takes a single sample");
    return res;
}

std::vector<int> parse_m_grid(const std::string& m_grid, int single_m, int n) {
    std::vector<int> out;
    if (!m_grid.empty()) {
        // "a:b:step" or comma list
        if (m_grid.find(':') != std::string::npos) {
            int a, b, st;
            if (std::sscanf(m_grid.c_str(), "%d:%d:%d", &a, &b, &st) != 3 || st <= 0)
                throw CLI::ValidationError("--m-grid must be a:b:step");
            for (int m = a; m <= b; m += st) out.push_back(m);
        } else {
            std::string tok;
            std::istringstream iss(m_grid);
            while (std::getline(iss, tok, ',')) out.push_back(std::stoi(tok));
        }
    } else if (single_m >= 0) {
        out.push_back(single_m);
    } else {
        for (int m = 0; m <= n / 2; ++m) out.push_back(m);
    }
    for (int m : out)
        if (m < 0 || m > n) throw CLI::ValidationError("m out of range [0, n]");
    return out;
}

std::vector<double> parse_eta_grid(const std::string& grid, double single_eta) {
    std::vector<double> out;
    if (!grid.empty()) {
        std::string tok;
        std::istringstream iss(grid);
        while (std::getline(iss, tok, ',')) out.push_back(std::stod(tok));
    } else {
        out.push_back(single_eta);
    }
    for (double e : out)
        if (!(e > 0.0)) throw CLI::ValidationError("eta values must be positive");
    return out;
}

json bracket_json(const BpBracket& b) {
    return {{"lower", b.lower()},
            {"upper", b.upper()},
            {"lower_k", b.lower_k},
            {"upper_k", b.upper_k},
            {"denom", b.denom},
            {"exact", b.exact},
            {"upper_attained", b.upper_attained}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"threshold breakdown points and m-sensitivities of M-estimators"};
    app.set_config("--config", "", "plain key=value configuration file");
    GlobalOpts g;

    app.add_option("--input", g.input, "input data file (CSV or whitespace separated)");
    app.add_option("--input2", g.input2, "second sample for two-sample analyses");
    app.add_option("--col", g.col, "value column (name or 0-based index)");
    app.add_option("--group-col", g.group_col, "group column defining two samples");
    app.add_flag("--mad-normalize", g.mad_normalize,
                 "scale each group by its MAD (normal consistency constant 1.4826)");
    app.add_option("--loss", g.loss, "huber|logcosh|selfconcordant|identity|sign")
        ->default_val("huber");
    app.add_option("--delta", g.delta, "loss tuning constant")->default_val(1.345);
    app.add_option("--efficiency", g.efficiency,
                   "tune delta for this normal efficiency instead of --delta");
    app.add_option("--deriv-convention", g.deriv_convention, "indicator|delta_scaled")
        ->default_val("indicator");
    app.add_option("--alpha", g.alpha, "test level")->default_val(0.05);
    app.add_option("--side", g.side, "plus|minus|both")->default_val("both");
    app.add_option("--format", g.format, "csv|json")->default_val("csv");
    app.add_option("--out", g.out, "output path (stdout when omitted)");
    app.add_option("--seed", g.seed, "RNG seed")->default_val(1);
    app.add_option("--threads", g.threads, "worker thread cap")->default_val(1);
    app.add_flag("--a-grid", g.use_a_grid, "add the psi-level target grid to the schemes");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "location / scale / two-stage point estimates");
    bool fit_two_stage = false;
    fit->add_flag("--two-stage", fit_two_stage, "two-stage location-scale fit");

    // ---- sensitivity ----
    auto* sens = app.add_subcommand("sensitivity", "m-sensitivity curves");
    std::string sens_estimator = "location";
    int sens_m = -1;
    std::string sens_m_grid;
    double sens_theta0 = 0.0;
    sens->add_option("--estimator", sens_estimator,
                     "location|scale|two-stage|se-restricted|se-plugin");
    sens->add_option("--m", sens_m, "single contamination count");
    sens->add_option("--m-grid", sens_m_grid, "a:b:step or comma list");
    sens->add_option("--theta0", sens_theta0, "center for se-restricted");

    // ---- breakdown ----
    auto* bp = app.add_subcommand("breakdown", "threshold breakdown points");
    std::string bp_estimator = "location";
    double bp_eta = 0.0;
    std::string bp_eta_grid;
    bp->add_option("--estimator", bp_estimator, "location|scale|two-stage");
    bp->add_option("--eta", bp_eta, "threshold");
    bp->add_option("--eta-grid", bp_eta_grid, "comma list of thresholds");

    // ---- test-audit ----
    auto* audit = app.add_subcommand("test-audit", "breakdown audit of a hypothesis test");
    std::string audit_test = "wald";
    std::string audit_sided = "two";
    double audit_sigma0 = 0.0;
    double audit_theta0 = 0.0;
    std::string audit_budget = "total";
    int band_m_max = -1;
    audit->add_option("--test", audit_test, "wald|rwald|score|rscore|two-sample|fixed");
    audit->add_option("--sided", audit_sided, "two|upper|lower");
    audit->add_option("--sigma0", audit_sigma0, "fixed null scale (fixed|rscore)");
    audit->add_option("--theta0", audit_theta0, "null value");
    audit->add_option("--budget", audit_budget, "total|per-sample (two-sample)");
    audit->add_option("--band-m-max", band_m_max,
                      "emit statistic bands for m = 0..band-m-max (two-sample)");

    // ---- bootstrap ----
    auto* boot = app.add_subcommand("bootstrap", "multiplier bootstrap CIs");
    std::string boot_stat = "sensitivity";
    int boot_m = 1;
    double boot_eta = 0.0;
    int boot_B = 1000;
    std::string boot_method = "basic";
    std::string boot_levels = "0.8,0.95";
    std::string boot_draws_out;
    boot->add_option("--stat", boot_stat, "sensitivity|bp");
    boot->add_option("--m", boot_m, "contamination count (sensitivity)");
    boot->add_option("--eta", boot_eta, "threshold (bp)");
    boot->add_option("--boot-B", boot_B, "bootstrap replicates")->default_val(1000);
    boot->add_option("--method", boot_method, "basic|percentile");
    boot->add_option("--ci-levels", boot_levels, "comma list of CI levels");
    boot->add_option("--draws-out", boot_draws_out, "optional CSV of draws");

    // ---- population ----
    auto* pop = app.add_subcommand("population", "population maxbias curve and variances");
    std::string pop_model = "normal";
    double pop_eps_max = 0.45, pop_step = 0.0005, pop_eps = 0.0;
    pop->add_option("--model", pop_model, "normal|uniform|cauchy");
    pop->add_option("--eps-max", pop_eps_max, "curve endpoint")->default_val(0.45);
    pop->add_option("--step", pop_step, "RK4 step")->default_val(0.0005);
    pop->add_option("--eps", pop_eps, "also report variances V/sigma^2 at this eps");

    // ---- pit ----
    auto* pit = app.add_subcommand("pit", "randomized PIT bootstrap diagnostic");
    std::string pit_model = "normal";
    double pit_eps = 0.1;
    int pit_n = 100, pit_M = 200, pit_B = 200;
    pit->add_option("--model", pit_model, "normal|uniform|cauchy");
    pit->add_option("--eps", pit_eps, "contamination fraction")->default_val(0.1);
    pit->add_option("--n", pit_n, "sample size")->default_val(100);
    pit->add_option("--M", pit_M, "outer replications")->default_val(200);
    pit->add_option("--B", pit_B, "bootstrap replicates")->default_val(200);

    // ---- replicate ----
    auto* rep = app.add_subcommand("replicate", "replicate a study protocol at desk scale");
    std::string rep_id, rep_preset = "desk", rep_dir = ".";
    rep->add_option("--experiment", rep_id, "experiment id")->required();
    rep->add_option("--preset", rep_preset, "desk|full");
    rep->add_option("--out-dir", rep_dir, "output directory");

    // ---- oracle ----
    auto* orc = app.add_subcommand("oracle", "brute-force contamination search (small n)");
    std::string orc_estimator = "location";
    int orc_m = 1;
    bool orc_enabled = false;
    orc->add_option("--estimator", orc_estimator,
                    "location|scale|two-stage|se-restricted|se-plugin");
    orc->add_option("--m", orc_m, "contamination count");
    orc->add_flag("--oracle", orc_enabled, "acknowledge exponential cost");

    app.require_subcommand(1);
    for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
        sc->fallthrough();

    try {
        app.parse(argc, argv);

        const ScoreFamily score = make_score(g);
        const Side side = side_of(g.side);
        SchemeConfig scheme;
        scheme.use_a_grid = g.use_a_grid;
        const auto chi_of = [&]() {
            return make_scale_family(score, PopulationModel::normal());
        };

        if (*fit) {
            IngestResult data = load_data(g);
            json out;
            auto one = [&](const Sample& s, const std::string& label) {
                json j;
                j["n"] = s.n();
                if (fit_two_stage) {
                    auto chi = chi_of();
                    FitResult f = solve_two_stage(s, score, chi);
                    j["theta_hat"] = f.theta_hat;
                    j["sigma_hat"] = *f.sigma_hat;
                    j["se_hat"] = *f.sigma_hat * plugin_se_ratio(s, score, f.theta_hat,
                                                                 *f.sigma_hat);
                    j["residual"] = f.residual;
                } else {
                    FitResult f = solve_location(s, score);
                    j["theta_hat"] = f.theta_hat;
                    j["se_hat"] = plugin_se(s, score, f.theta_hat);
                    j["residual"] = f.residual;
                }
                out[label] = j;
            };
            one(data.x, "x");
            if (data.y) one(*data.y, "y");
            out["rejected_rows"] = data.rejected_rows;
            write_output(g, out.dump(2) + "\n");
            return 0;
        }

        if (*sens) {
            IngestResult data = load_data(g, false);
            const Sample& s = data.x;
            EstimatorSpec espec;
            std::optional<ScaleScoreFamily> chi;
            if (sens_estimator == "location") espec.kind = EstimatorSpec::Kind::location;
            else if (sens_estimator == "scale") espec.kind = EstimatorSpec::Kind::scale;
            else if (sens_estimator == "two-stage") espec.kind = EstimatorSpec::Kind::two_stage;
            else if (sens_estimator == "se-restricted") espec.kind = EstimatorSpec::Kind::se_restricted;
            else if (sens_estimator == "se-plugin") espec.kind = EstimatorSpec::Kind::se_plugin;
            else throw CLI::ValidationError("unknown --estimator");
            espec.theta0 = sens_theta0;
            if (espec.kind == EstimatorSpec::Kind::scale ||
                espec.kind == EstimatorSpec::Kind::two_stage)
                chi = chi_of();
            const auto m_grid = parse_m_grid(sens_m_grid, sens_m, int(s.n()));
            const auto curve = sensitivity_curve(s, score, chi, espec, m_grid, scheme);

            if (g.format == "json") {
                json rows = json::array();
                for (std::size_t i = 0; i < curve.size(); ++i) {
                    json r = {{"m", m_grid[i]},
                              {"m_over_n", double(m_grid[i]) / double(s.n())}};
                    auto point = [&](const SensitivityPoint& p) {
                        return json{{"eta_plus", p.eta_plus},
                                    {"eta_minus", p.eta_minus},
                                    {"eta", p.eta_two_sided}};
                    };
                    if (curve[i].exact)
                        r["exact"] = point(curve[i].lower);
                    else {
                        r["lower"] = point(curve[i].lower);
                        r["upper"] = point(curve[i].upper);
                    }
                    rows.push_back(r);
                }
                write_output(g, rows.dump(2) + "\n");
            } else {
                CsvWriter csv({"m", "m_over_n", "eta_plus", "eta_minus", "eta", "kind"});
                for (std::size_t i = 0; i < curve.size(); ++i) {
                    auto emit = [&](const SensitivityPoint& p, const std::string& kind) {
                        csv.row({std::to_string(m_grid[i]),
                                 format_double(double(m_grid[i]) / double(s.n())),
                                 format_double(p.eta_plus), format_double(p.eta_minus),
                                 format_double(p.eta_two_sided), kind});
                    };
                    if (curve[i].exact)
                        emit(curve[i].lower, "exact");
                    else {
                        emit(curve[i].lower, "lower_bound");
                        emit(curve[i].upper, "upper_bound");
                    }
                }
                write_output(g, csv.str());
            }
            return 0;
        }

        if (*bp) {
            IngestResult data = load_data(g, false);
            const Sample& s = data.x;
            const auto etas = parse_eta_grid(bp_eta_grid, bp_eta);
            CsvWriter csv({"eta", "side", "k", "n", "bp", "kind"});
            for (double eta : etas) {
                if (bp_estimator == "location") {
                    const double theta = solve_location(s, score).theta_hat;
                    BreakdownResult r = location_bp(s, score, theta, eta, side);
                    csv.row({format_double(eta), side_name(side), std::to_string(r.k),
                             std::to_string(r.n), format_double(r.bp()), "exact"});
                } else if (bp_estimator == "scale") {
                    auto chi = chi_of();
                    const double sigma = *solve_scale(s, chi).sigma_hat;
                    BreakdownResult r = scale_bp(s, chi, sigma, eta, side);
                    csv.row({format_double(eta), side_name(side), std::to_string(r.k),
                             std::to_string(r.n), format_double(r.bp()), "exact"});
                } else if (bp_estimator == "two-stage") {
                    auto chi = chi_of();
                    auto [lo, hi] = two_stage_bp_bounds(s, score, chi, eta, side, scheme);
                    csv.row({format_double(eta), side_name(side), std::to_string(lo.k),
                             std::to_string(lo.n), format_double(lo.bp()), "lower_bound"});
                    csv.row({format_double(eta), side_name(side), std::to_string(hi.k),
                             std::to_string(hi.n), format_double(hi.bp()), "upper_bound"});
                } else {
                    throw CLI::ValidationError("unknown --estimator");
                }
            }
            write_output(g, csv.str());
            return 0;
        }

        if (*audit) {
            IngestResult data = load_data(g);
            TestSpec spec;
            spec.alpha = g.alpha;
            spec.theta0 = audit_theta0;
            spec.scheme = scheme;
            spec.budget = audit_budget == "per-sample" ? BudgetMode::per_sample
                                                       : BudgetMode::total;
            if (audit_sided == "upper") spec.sided = Sidedness::one_sided_upper;
            else if (audit_sided == "lower") spec.sided = Sidedness::one_sided_lower;
            if (audit_sigma0 > 0.0) spec.sigma0 = audit_sigma0;

            if (audit_test == "two-sample") spec.kind = TestKind::two_sample_wald;
            else if (audit_test == "rwald") spec.kind = TestKind::restricted_wald;
            else if (audit_test == "score") spec.kind = TestKind::score_test;
            else if (audit_test == "rscore") spec.kind = TestKind::restricted_score;
            else if (audit_test == "fixed") spec.kind = TestKind::fixed_sigma_wald;
            else spec.kind = TestKind::wald;

            json out;
            TestAudit a;
            if (spec.kind == TestKind::two_sample_wald) {
                if (!data.y) throw DataError("two-sample audit needs --input2 or --group-col");
                a = two_sample_bp_bounds(data.x, *data.y, score, spec);
            } else if (spec.kind == TestKind::score_test ||
                       spec.kind == TestKind::restricted_score) {
                a = score_test_bp(data.x, score, spec);
            } else {
                a = test_bp_bounds(data.x, score, spec);
            }
            out["decision"] = a.run.decision;
            out["statistic"] = a.run.statistic;
            out["estimate"] = a.run.estimate;
            out["se"] = a.run.se;
            out["interval"] = {a.run.lower, a.run.upper};
            out[a.run.decision ? "reject_bp" : "accept_bp"] = bracket_json(a.active());
            if (spec.kind == TestKind::two_sample_wald && band_m_max >= 0) {
                json bands = json::array();
                CsvWriter csv({"m", "m_over_nstar", "low", "high"});
                const int nstar = int(std::min(data.x.n(), data.y->n()));
                for (int m = 0; m <= band_m_max; ++m) {
                    StatisticBand b = statistic_band(data.x, *data.y, score, m, spec);
                    bands.push_back({{"m", m}, {"low", b.low}, {"high", b.high}});
                    csv.row({std::to_string(m), format_double(double(m) / nstar),
                             format_double(b.low), format_double(b.high)});
                }
                out["bands"] = bands;
                if (g.format == "csv") {
                    write_output(g, csv.str());
                    return 0;
                }
            }
            write_output(g, out.dump(2) + "\n");
            return 0;
        }

        if (*boot) {
            IngestResult data = load_data(g, false);
            BootstrapConfig cfg;
            cfg.replicates = boot_B;
            cfg.seed = g.seed;
            cfg.threads = g.threads;
            cfg.method = boot_method == "percentile" ? CiMethod::percentile : CiMethod::basic;
            cfg.ci_levels.clear();
            {
                std::istringstream iss(boot_levels);
                std::string tok;
                while (std::getline(iss, tok, ',')) cfg.ci_levels.push_back(std::stod(tok));
            }
            const Side bside = side == Side::two_sided ? Side::plus : side;
            BootstrapSummary s = boot_stat == "bp"
                                     ? bootstrap_bp(data.x, score, boot_eta, bside, cfg)
                                     : bootstrap_sensitivity(data.x, score, boot_m, bside, cfg);
            json out;
            out["point"] = s.point;
            out["B"] = boot_B;
            out["seed"] = g.seed;
            out["failures"] = s.failures;
            out["method"] = boot_method;
            json ci;
            for (const auto& [level, pair] : s.ci)
                ci[format_double(level)] = {pair.first, pair.second};
            out["ci"] = ci;
            write_output(g, out.dump(2) + "\n");
            if (!boot_draws_out.empty()) {
                CsvWriter csv({"replicate", "draw"});
                for (std::size_t i = 0; i < s.draws.size(); ++i)
                    csv.row({std::to_string(i), format_double(s.draws[i])});
                csv.write_file(boot_draws_out);
            }
            return 0;
        }

        if (*pop) {
            const PopulationModel model = make_model_by_name(pop_model);
            MaxbiasCurve c = maxbias_curve(model, score, pop_eps_max, pop_step);
            CsvWriter csv({"epsilon", "eta_plus", "eta_minus", "deta_plus", "deta_minus"});
            for (std::size_t i = 0; i < c.eps.size(); ++i)
                csv.row_values({c.eps[i], c.eta_plus[i], c.eta_minus[i], c.deta_plus[i],
                                c.deta_minus[i]});
            if (pop_eps > 0.0) {
                json out;
                out["eps"] = pop_eps;
                out["theta0"] = population_location(model, score);
                out["eta_plus"] = population_sensitivity(model, score, pop_eps, Side::plus);
                out["eta_minus"] = population_sensitivity(model, score, pop_eps, Side::minus);
                out["V_plus"] = asymptotic_variance_sensitivity(model, score, pop_eps, Side::plus);
                out["V_minus"] =
                    asymptotic_variance_sensitivity(model, score, pop_eps, Side::minus);
                out["sigma2_plus"] = asymptotic_variance_bp(model, score, pop_eps, Side::plus);
                out["sigma2_minus"] = asymptotic_variance_bp(model, score, pop_eps, Side::minus);
                write_output(g, g.format == "json" ? out.dump(2) + "\n"
                                                   : csv.str() + out.dump(2) + "\n");
                return 0;
            }
            write_output(g, csv.str());
            return 0;
        }

        if (*pit) {
            BootstrapConfig cfg;
            cfg.seed = g.seed;
            cfg.threads = g.threads;
            const PopulationModel model = make_model_by_name(pit_model);
            const Side pside = side == Side::two_sided ? Side::plus : side;
            PitResult r = pit_uniformity(model, score, pit_eps, pit_n, pit_M, pit_B, pside, cfg);
            json out;
            out["ks_stat"] = r.ks_stat;
            out["p_value"] = r.p_value;
            out["M"] = int(r.u.size());
            out["B"] = pit_B;
            out["n"] = pit_n;
            out["eps"] = pit_eps;
            if (g.format == "json") {
                out["u"] = r.u;
                write_output(g, out.dump(2) + "\n");
            } else {
                CsvWriter csv({"j", "u"});
                for (std::size_t j = 0; j < r.u.size(); ++j)
                    csv.row({std::to_string(j), format_double(r.u[j])});
                write_output(g, csv.str());
                std::fprintf(stderr, "%s\n", out.dump().c_str());
            }
            return 0;
        }

        if (*rep) {
            ReplicateConfig cfg;
            cfg.experiment = rep_id;
            cfg.preset = rep_preset == "full" ? ScalePreset::full : ScalePreset::desk;
            cfg.seed = g.seed;
            cfg.threads = g.threads;
            cfg.out_dir = rep_dir;
            const auto files = run_replicate(cfg);
            for (const auto& f : files) std::printf("%s\n", f.c_str());
            return 0;
        }

        if (*orc) {
            if (!orc_enabled)
                throw CLI::ValidationError("the oracle is exponential; pass --oracle to confirm");
            IngestResult data = load_data(g, false);
            OracleConfig cfg;
            cfg.assign = OracleConfig::Assign::full;
            cfg.refine = true;
            OracleTarget target;
            std::optional<ScaleScoreFamily> chi;
            if (orc_estimator == "scale") {
                target.kind = OracleTarget::Kind::scale;
                chi = chi_of();
            } else if (orc_estimator == "two-stage") {
                target.kind = OracleTarget::Kind::two_stage;
                chi = chi_of();
            } else if (orc_estimator == "se-restricted") {
                target.kind = OracleTarget::Kind::se_restricted;
            } else if (orc_estimator == "se-plugin") {
                target.kind = OracleTarget::Kind::se_plugin;
            }
            const Side oside = side == Side::two_sided ? Side::plus : side;
            const double v =
                brute_force_sensitivity(data.x, target, score, chi, orc_m, oside, cfg);
            json out;
            out["m"] = orc_m;
            out["side"] = side_name(oside);
            out["value"] = v;
            write_output(g, out.dump(2) + "\n");
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 4;
    }
    return 0;
}
