#include "robustbp/replicate.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "robustbp/bootstrap.hpp"
#include "robustbp/csv.hpp"
#include "robustbp/parallel.hpp"
#include "robustbp/stats.hpp"
#include "robustbp/tests.hpp"

namespace robustbp {

namespace {

using nlohmann::json;

struct Ctx {
    const ReplicateConfig& cfg;
    std::vector<std::string> files;
    json manifest;

    void emit(const std::string& name, const CsvWriter& csv) {
        const std::string path = cfg.out_dir + "/" + name;
        csv.write_file(path);
        files.push_back(path);
    }
    void finish(const std::string& name) {
        const std::string path = cfg.out_dir + "/" + name;
        std::ofstream out(path, std::ios::binary);
        out << manifest.dump(2) << "\n";
        files.push_back(path);
    }
};

std::vector<double> normal_draws(Rng& rng, int n, double shift) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.normal() + shift;
    return xs;
}

std::vector<double> model_draws(const PopulationModel& model, Rng& rng, int n) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = model.sample(rng);
    return xs;
}

ScoreFamily score_by_name(const std::string& loss) {
    if (loss == "huber") return ScoreFamily::huber(1.345);
    if (loss == "logcosh") return ScoreFamily::logcosh(1.2047);
    return ScoreFamily::self_concordant(1.4811);
}

// ---- fig_location_curves: m-sensitivity curves across losses and models ----
void fig_location_curves(Ctx& ctx) {
    const bool full = ctx.cfg.preset == ScalePreset::full;
    const int n = 1000;
    const int reps = full ? 100 : 5;
    std::vector<int> m_grid;
    for (int m = 20; m <= 460; m += 40) m_grid.push_back(m);
    const std::vector<std::string> losses = {"huber", "logcosh", "selfconcordant"};
    const std::vector<std::string> dists = {"normal", "cauchy", "uniform"};

    CsvWriter csv({"loss", "dist", "n", "m", "m_over_n", "eta_plus", "eta_minus", "eta"});
    struct Key {
        std::string loss, dist;
        int m;
    };
    std::vector<Key> keys;
    for (const auto& loss : losses)
        for (const auto& dist : dists)
            for (int m : m_grid) keys.push_back({loss, dist, m});
    std::vector<std::array<double, 3>> acc(keys.size(), {0, 0, 0});

    parallel_for(int(keys.size()), ctx.cfg.threads, [&](int idx) {
        const auto& k = keys[idx];
        const ScoreFamily score = score_by_name(k.loss);
        const PopulationModel model = make_model_by_name(k.dist);
        double sp = 0, sm = 0, st = 0;
        for (int r = 0; r < reps; ++r) {
            Rng rng = Rng::stream(ctx.cfg.seed,
                                  std::uint64_t(r) * 101 + std::uint64_t(idx / int(m_grid.size())));
            Sample s(model_draws(model, rng, n));
            const double theta = solve_location(s, score).theta_hat;
            SensitivityPoint p = location_sensitivity(s, score, theta, k.m);
            sp += p.eta_plus;
            sm += p.eta_minus;
            st += p.eta_two_sided;
        }
        acc[idx] = {sp / reps, sm / reps, st / reps};
    });
    for (std::size_t i = 0; i < keys.size(); ++i)
        csv.row({keys[i].loss, keys[i].dist, std::to_string(n), std::to_string(keys[i].m),
                 format_double(double(keys[i].m) / n), format_double(acc[i][0]),
                 format_double(acc[i][1]), format_double(acc[i][2])});
    ctx.emit("fig_location_curves.csv", csv);
    ctx.manifest["m_grid"] = m_grid;
    ctx.manifest["n"] = n;
    ctx.manifest["reps"] = reps;
}

// ---- fig_two_stage: sensitivity brackets and bp brackets, three models ----
void fig_two_stage(Ctx& ctx) {
    const bool full = ctx.cfg.preset == ScalePreset::full;
    const int n = full ? 1000 : 300;
    const int reps = full ? 100 : 5;
    const auto score = ScoreFamily::huber(1.345);
    const auto chi = make_scale_family(score, PopulationModel::normal());
    std::vector<int> m_grid;
    for (int m = 10; m <= 150; m += 10) m_grid.push_back(int(m * (n / 1000.0) + 0.5));
    if (!full) {
        m_grid.clear();
        for (int m = 3; m <= 45; m += 3) m_grid.push_back(m);
    }
    std::vector<double> eta_grid;
    for (int k = 1; k <= 10; ++k) eta_grid.push_back(0.1 * k);
    const std::vector<std::string> dists = {"normal", "cauchy", "uniform"};

    CsvWriter sens({"dist", "n", "m", "m_over_n", "eta_lower", "eta_upper"});
    CsvWriter bps({"dist", "n", "eta", "bp_lower", "bp_upper"});
    for (const auto& dist : dists) {
        const PopulationModel model = make_model_by_name(dist);
        std::vector<std::vector<double>> sacc(m_grid.size(), std::vector<double>{});
        std::vector<double> slo(m_grid.size(), 0), shi(m_grid.size(), 0);
        std::vector<double> blo(eta_grid.size(), 0), bhi(eta_grid.size(), 0);
        std::vector<int> bcount(eta_grid.size(), 0);
        for (int r = 0; r < reps; ++r) {
            Rng rng = Rng::stream(ctx.cfg.seed + 7, std::uint64_t(r));
            Sample s(model_draws(model, rng, n));
            parallel_for(int(m_grid.size()), ctx.cfg.threads, [&](int i) {
                auto [lo, hi] = two_stage_sensitivity_bounds(s, score, chi, m_grid[i]);
                slo[i] += lo.eta_two_sided / reps;
                shi[i] += std::isfinite(hi.eta_two_sided) ? hi.eta_two_sided / reps : 0.0;
            });
            parallel_for(int(eta_grid.size()), ctx.cfg.threads, [&](int i) {
                auto [lo, hi] = two_stage_bp_bounds(s, score, chi, eta_grid[i], Side::two_sided);
                blo[i] += lo.bp() / reps;
                bhi[i] += hi.bp() / reps;
                ++bcount[i];
            });
        }
        for (std::size_t i = 0; i < m_grid.size(); ++i)
            sens.row({dist, std::to_string(n), std::to_string(m_grid[i]),
                      format_double(double(m_grid[i]) / n), format_double(slo[i]),
                      format_double(shi[i])});
        for (std::size_t i = 0; i < eta_grid.size(); ++i)
            bps.row({dist, std::to_string(n), format_double(eta_grid[i]), format_double(blo[i]),
                     format_double(bhi[i])});
    }
    ctx.emit("fig_two_stage_sensitivity.csv", sens);
    ctx.emit("fig_two_stage_bp.csv", bps);
    ctx.manifest["n"] = n;
    ctx.manifest["reps"] = reps;
}

// ---- fig_test_vshape: reject-BP bounds across the effect size ----
void fig_test_vshape(Ctx& ctx) {
    const bool full = ctx.cfg.preset == ScalePreset::full;
    const std::vector<int> ns = full ? std::vector<int>{500, 1000, 2000} : std::vector<int>{500};
    const int reps = full ? 100 : 20;
    const int grid_pts = full ? 17 : 9;
    const auto score = ScoreFamily::huber(1.345);
    const std::vector<std::string> tests = {"wald", "rwald", "score", "rscore"};

    CsvWriter csv({"test", "n", "theta", "bp_lower_mean", "bp_upper_mean", "reps_used"});
    for (const auto& test : tests) {
        for (int n : ns) {
            std::vector<double> thetas(grid_pts);
            for (int i = 0; i < grid_pts; ++i)
                thetas[i] = -2.0 + 4.0 * double(i) / double(grid_pts - 1);
            std::vector<double> lo_mean(grid_pts, 0), hi_mean(grid_pts, 0);
            std::vector<int> used(grid_pts, 0);
            parallel_for(grid_pts, ctx.cfg.threads, [&](int gi) {
                TestSpec spec;
                spec.alpha = 0.05;
                if (test == "wald") spec.kind = TestKind::wald;
                if (test == "rwald") spec.kind = TestKind::restricted_wald;
                if (test == "score") spec.kind = TestKind::score_test;
                if (test == "rscore") spec.kind = TestKind::restricted_score;
                double slo = 0, shi = 0;
                int cnt = 0;
                for (int r = 0; r < reps; ++r) {
                    Rng rng = Rng::stream(ctx.cfg.seed + 13,
                                          std::uint64_t(gi) * 100003 + std::uint64_t(r));
                    // condition on a rejecting dataset
                    for (int attempt = 0; attempt < 4000; ++attempt) {
                        Sample s(normal_draws(rng, n, thetas[gi]));
                        TestAudit a;
                        try {
                            a = (spec.kind == TestKind::score_test ||
                                 spec.kind == TestKind::restricted_score)
                                    ? score_test_bp(s, score, spec)
                                    : test_bp_bounds(s, score, spec);
                        } catch (const std::exception&) {
                            continue;
                        }
                        if (a.run.decision != 1) continue;
                        slo += a.reject_bp.lower();
                        shi += a.reject_bp.upper();
                        ++cnt;
                        break;
                    }
                }
                lo_mean[gi] = cnt ? slo / cnt : 0.0;
                hi_mean[gi] = cnt ? shi / cnt : 0.0;
                used[gi] = cnt;
            });
            for (int gi = 0; gi < grid_pts; ++gi)
                csv.row({test, std::to_string(n), format_double(thetas[gi]),
                         format_double(lo_mean[gi]), format_double(hi_mean[gi]),
                         std::to_string(used[gi])});
        }
    }
    ctx.emit("fig_test_vshape.csv", csv);
    ctx.manifest["reps"] = reps;
    ctx.manifest["grid_pts"] = grid_pts;
}

// ---- fig_gap_vs_n: Wald bracket gap shrinks with n ----
void fig_gap_vs_n(Ctx& ctx) {
    const bool full = ctx.cfg.preset == ScalePreset::full;
    std::vector<int> ns;
    if (full)
        for (int n = 50; n <= 4050; n += 400) ns.push_back(n);
    else
        ns = {50, 450, 1050};
    const int reps = full ? 100 : 30;
    const auto score = ScoreFamily::huber(1.345);

    CsvWriter csv({"test", "dist", "n", "rep", "gap"});
    std::vector<std::array<double, 2>> rows(ns.size() * reps, {0, 0});
    parallel_for(int(ns.size() * reps), ctx.cfg.threads, [&](int idx) {
        const int ni = idx / reps;
        TestSpec spec;
        spec.kind = TestKind::wald;
        spec.alpha = 0.05;
        Rng rng = Rng::stream(ctx.cfg.seed + 21, std::uint64_t(idx));
        double gap = 0.0;
        for (int attempt = 0; attempt < 200; ++attempt) {
            Sample s(normal_draws(rng, ns[ni], 1.0));
            TestAudit a;
            try {
                a = test_bp_bounds(s, score, spec);
            } catch (const std::exception&) {
                continue;
            }
            if (a.run.decision != 1) continue;
            gap = a.reject_bp.upper() - a.reject_bp.lower();
            break;
        }
        rows[idx] = {double(ns[ni]), gap};
    });
    std::vector<double> xs, ys;
    for (std::size_t idx = 0; idx < rows.size(); ++idx) {
        const int ni = int(idx) / reps;
        const int r = int(idx) % reps;
        csv.row({"wald", "normal", std::to_string(ns[ni]), std::to_string(r),
                 format_double(rows[idx][1])});
        xs.push_back(rows[idx][0]);
        ys.push_back(rows[idx][1]);
    }
    ctx.emit("fig_gap_vs_n.csv", csv);
    const SlopeTest st = slope_test(xs, ys);
    ctx.manifest["slope"] = st.slope;
    ctx.manifest["t"] = st.t;
    ctx.manifest["p_one_sided_negative"] = st.p_one_sided_negative;
}

// ---- fig_two_sample_vshape ----
void fig_two_sample_vshape(Ctx& ctx) {
    const bool full = ctx.cfg.preset == ScalePreset::full;
    const std::vector<int> ns = full ? std::vector<int>{50, 100, 200} : std::vector<int>{50};
    const int reps = full ? 100 : 10;
    const int grid_pts = full ? 17 : 9;
    const auto score = ScoreFamily::huber(1.345);

    CsvWriter csv({"n", "theta", "bp_lower_mean", "bp_upper_mean", "reps_used"});
    for (int n : ns) {
        std::vector<double> thetas(grid_pts);
        for (int i = 0; i < grid_pts; ++i)
            thetas[i] = -2.0 + 4.0 * double(i) / double(grid_pts - 1);
        std::vector<double> lo_mean(grid_pts, 0), hi_mean(grid_pts, 0);
        std::vector<int> used(grid_pts, 0);
        parallel_for(grid_pts, ctx.cfg.threads, [&](int gi) {
            TestSpec spec;
            spec.kind = TestKind::two_sample_wald;
            spec.alpha = 0.05;
            double slo = 0, shi = 0;
            int cnt = 0;
            for (int r = 0; r < reps; ++r) {
                Rng rng = Rng::stream(ctx.cfg.seed + 34,
                                      std::uint64_t(gi) * 7919 + std::uint64_t(r));
                for (int attempt = 0; attempt < 2000; ++attempt) {
                    Sample x(normal_draws(rng, n, 0.0));
                    Sample y(normal_draws(rng, n, thetas[gi]));
                    TestAudit a;
                    try {
                        a = two_sample_bp_bounds(x, y, score, spec);
                    } catch (const std::exception&) {
                        continue;
                    }
                    if (a.run.decision != 1) continue;
                    slo += a.reject_bp.lower();
                    shi += a.reject_bp.upper();
                    ++cnt;
                    break;
                }
            }
            lo_mean[gi] = cnt ? slo / cnt : 0.0;
            hi_mean[gi] = cnt ? shi / cnt : 0.0;
            used[gi] = cnt;
        });
        for (int gi = 0; gi < grid_pts; ++gi)
            csv.row({std::to_string(n), format_double(thetas[gi]), format_double(lo_mean[gi]),
                     format_double(hi_mean[gi]), std::to_string(used[gi])});
    }
    ctx.emit("fig_two_sample_vshape.csv", csv);
    ctx.manifest["reps"] = reps;
}

// ---- fig_pit ----
void fig_pit(Ctx& ctx) {
    const bool full = ctx.cfg.preset == ScalePreset::full;
    const int n = full ? 100 : 100;
    const int M = full ? 1000 : 200;
    const int B = full ? 1000 : 200;
    const auto score = ScoreFamily::huber(1.345);
    const auto model = PopulationModel::normal();

    CsvWriter csv({"eps", "j", "u"});
    json ks = json::array();
    for (double eps : {0.03, 0.1, 0.15}) {
        BootstrapConfig cfg;
        cfg.seed = ctx.cfg.seed + std::uint64_t(eps * 1000);
        cfg.threads = ctx.cfg.threads;
        PitResult r = pit_uniformity(model, score, eps, n, M, B, Side::plus, cfg);
        for (std::size_t j = 0; j < r.u.size(); ++j)
            csv.row({format_double(eps), std::to_string(j), format_double(r.u[j])});
        ks.push_back({{"eps", eps}, {"ks_stat", r.ks_stat}, {"p_value", r.p_value},
                      {"M", int(r.u.size())}, {"B", B}, {"n", n}});
    }
    ctx.emit("fig_pit_u.csv", csv);
    ctx.manifest["ks"] = ks;
}

}  // namespace

std::vector<std::string> replicate_experiment_ids() {
    return {"fig_location_curves", "fig_two_stage",         "fig_test_vshape",
            "fig_gap_vs_n",        "fig_two_sample_vshape", "fig_pit"};
}

std::vector<std::string> run_replicate(const ReplicateConfig& config) {
    Ctx ctx{config, {}, {}};
    ctx.manifest["experiment"] = config.experiment;
    ctx.manifest["preset"] = config.preset == ScalePreset::full ? "full" : "desk";
    ctx.manifest["seed"] = config.seed;

    if (config.experiment == "fig_location_curves")
        fig_location_curves(ctx);
    else if (config.experiment == "fig_two_stage")
        fig_two_stage(ctx);
    else if (config.experiment == "fig_test_vshape")
        fig_test_vshape(ctx);
    else if (config.experiment == "fig_gap_vs_n")
        fig_gap_vs_n(ctx);
    else if (config.experiment == "fig_two_sample_vshape")
        fig_two_sample_vshape(ctx);
    else if (config.experiment == "fig_pit")
        fig_pit(ctx);
    else
        throw std::invalid_argument("unknown experiment id: " + config.experiment);

    ctx.finish(config.experiment + "_manifest.json");
    return ctx.files;
}

}  // namespace robustbp
