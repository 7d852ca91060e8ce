#include "robustbp/tests.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>
#include <stdexcept>

#include "robustbp/distributions.hpp"
#include "robustbp/tolerances.hpp"

namespace robustbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int decide(double lower, double upper, Sidedness sided) {
    switch (sided) {
        case Sidedness::two_sided: return (lower > 0.0 || upper < 0.0) ? 1 : 0;
        case Sidedness::one_sided_upper: return lower > 0.0 ? 1 : 0;
        case Sidedness::one_sided_lower: return upper < 0.0 ? 1 : 0;
    }
    return 0;
}

double restricted_score_scale(const ScoreFamily& score, const TestSpec& spec) {
    if (spec.sigma0) return *spec.sigma0;
    return std::sqrt(fisher_constant(score, PopulationModel::normal()));
}

std::vector<double> replace_left(const std::vector<double>& sorted, int m, double c) {
    std::vector<double> y = sorted;
    for (int i = 0; i < m; ++i) y[i] = c;
    return y;
}

std::vector<double> replace_right(const std::vector<double>& sorted, int m, double c) {
    std::vector<double> y = sorted;
    for (int i = int(y.size()) - m; i < int(y.size()); ++i) y[i] = c;
    return y;
}

}  // namespace

double TestSpec::critical_z() const {
    const double p = sided == Sidedness::two_sided ? 1.0 - alpha / 2.0 : 1.0 - alpha;
    return normal_quantile(p);
}

// ---------------------------------------------------------------- run_test

namespace {

RunResult run_interval_test(const Sample& centered, const ScoreFamily& score,
                            const TestSpec& spec) {
    RunResult r;
    const double zc = spec.critical_z();
    FitResult fit = solve_location(centered, score);
    if (fit.breakdown) {
        r.estimate = fit.theta_hat;
        r.statistic = fit.theta_hat > 0 ? kInf : -kInf;
        r.lower = r.upper = r.estimate;
        r.decision = 1;
        r.degenerate = true;
        r.note = "estimator broke down";
        return r;
    }
    r.estimate = fit.theta_hat;
    switch (spec.kind) {
        case TestKind::wald:
            r.se = plugin_se(centered, score, fit.theta_hat);
            break;
        case TestKind::restricted_wald:
            r.se = plugin_se(centered, score, 0.0);
            break;
        case TestKind::fixed_sigma_wald:
            if (!spec.sigma0 || !(*spec.sigma0 > 0.0))
                throw std::invalid_argument("fixed_sigma_wald needs sigma0 > 0");
            r.se = *spec.sigma0;
            break;
        default:
            throw std::invalid_argument("run_interval_test: wrong kind");
    }
    if (!(r.se > 0.0) || !std::isfinite(r.se)) {
        r.degenerate = true;
        r.note = "degenerate standard error";
        r.statistic = r.estimate == 0.0 ? 0.0 : (r.estimate > 0 ? kInf : -kInf);
        r.decision = r.estimate != 0.0 ? 1 : 0;
        r.lower = r.upper = r.estimate;
        return r;
    }
    r.statistic = r.estimate / r.se;
    r.lower = r.estimate - zc * r.se;
    r.upper = r.estimate + zc * r.se;
    r.decision = decide(r.lower, r.upper, spec.sided);
    return r;
}

RunResult run_score_test(const Sample& centered, const ScoreFamily& score,
                         const TestSpec& spec) {
    RunResult r;
    const double zc = spec.critical_z();
    const double n = double(centered.n());
    double v = 0.0, s2 = 0.0;
    for (double x : centered.values()) {
        const double p = std::isinf(x) ? (x > 0 ? score.psi_pos_inf() : score.psi_neg_inf())
                                       : score.evaluate(x);
        v += p;
        s2 += p * p;
    }
    r.estimate = v / std::sqrt(n);  // V_n
    r.se = spec.kind == TestKind::restricted_score ? restricted_score_scale(score, spec)
                                                   : std::sqrt(s2 / n);
    if (!(r.se > 0.0)) {
        r.degenerate = true;
        r.note = "degenerate score scale";
        r.statistic = r.estimate == 0.0 ? 0.0 : (r.estimate > 0 ? kInf : -kInf);
        r.decision = r.estimate != 0.0 ? 1 : 0;
        r.lower = r.upper = r.estimate;
        return r;
    }
    r.statistic = r.estimate / r.se;
    r.lower = r.estimate - zc * r.se;
    r.upper = r.estimate + zc * r.se;
    r.decision = decide(r.lower, r.upper, spec.sided);
    return r;
}

}  // namespace

RunResult run_test(const Sample& sample, const ScoreFamily& score, const TestSpec& spec) {
    const Sample centered = spec.theta0 != 0.0 ? sample.shifted(-spec.theta0) : sample;
    switch (spec.kind) {
        case TestKind::wald:
        case TestKind::restricted_wald:
        case TestKind::fixed_sigma_wald:
            return run_interval_test(centered, score, spec);
        case TestKind::score_test:
        case TestKind::restricted_score:
            return run_score_test(centered, score, spec);
        case TestKind::two_sample_wald:
            throw std::invalid_argument("two_sample_wald needs two samples");
    }
    throw std::invalid_argument("run_test: unknown kind");
}

RunResult run_test(const Sample& x, const Sample& y, const ScoreFamily& score,
                   const TestSpec& spec) {
    if (spec.kind != TestKind::two_sample_wald)
        throw std::invalid_argument("two-sample run_test: kind must be two_sample_wald");
    RunResult r;
    const double zc = spec.critical_z();
    FitResult fx = solve_location(x, score);
    FitResult fy = solve_location(y, score);
    if (fx.breakdown || fy.breakdown) {
        r.degenerate = true;
        r.note = "estimator broke down";
        const double d = fx.theta_hat - fy.theta_hat;
        r.estimate = d;
        r.statistic = d > 0 ? kInf : -kInf;
        r.decision = 1;
        r.lower = r.upper = d;
        return r;
    }
    const double sex = plugin_se(x, score, fx.theta_hat);
    const double sey = plugin_se(y, score, fy.theta_hat);
    r.estimate = fx.theta_hat - fy.theta_hat - spec.theta0;
    r.se = std::sqrt(sex * sex + sey * sey);
    r.statistic = r.estimate / r.se;
    r.lower = r.estimate - zc * r.se;
    r.upper = r.estimate + zc * r.se;
    r.decision = decide(r.lower, r.upper, spec.sided);
    return r;
}

// ---------------------------------------------------------------- one-sample audit

namespace {

struct SensCache {
    std::function<double(int, Side)> fn;
    std::vector<double> plus, minus;
    double get(int m, Side side) {
        auto& v = side == Side::plus ? plus : minus;
        while (int(v.size()) <= m) v.push_back(std::numeric_limits<double>::quiet_NaN());
        if (std::isnan(v[m])) v[m] = fn(m, side);
        return v[m];
    }
};

// scan m = 1..n for the first m with cond(m); returns (k, attained)
std::pair<int, bool> first_m(int n, const std::function<bool(int)>& cond) {
    for (int m = 1; m <= n; ++m)
        if (cond(m)) return {m, true};
    return {n, false};
}

template <typename F>
std::optional<RunResult> try_run(F&& f) {
    try {
        return f();
    } catch (const std::domain_error&) {
        return std::nullopt;  // degenerate under this contamination
    }
}

}  // namespace

TestAudit test_bp_bounds(const Sample& sample, const ScoreFamily& score, const TestSpec& spec) {
    if (spec.kind != TestKind::wald && spec.kind != TestKind::restricted_wald &&
        spec.kind != TestKind::fixed_sigma_wald)
        throw std::invalid_argument("test_bp_bounds: interval-test kinds only");
    TestAudit audit;
    audit.run = run_test(sample, score, spec);
    if (audit.run.degenerate) throw std::runtime_error("test_bp_bounds: degenerate test");

    const Sample z = spec.theta0 != 0.0 ? sample.shifted(-spec.theta0) : sample;
    const int n = int(z.n());
    const double zc = spec.critical_z();
    const double theta = audit.run.estimate;
    const double L = audit.run.lower, U = audit.run.upper;

    SensCache eta_theta{[&](int m, Side s) {
        return location_sensitivity_side(z, score, theta, m, s);
    }, {}, {}};
    SensCache eta_se{[&](int m, Side s) -> double {
        switch (spec.kind) {
            case TestKind::wald: return se_plugin_sensitivity_upper_side(z, score, m, s);
            case TestKind::restricted_wald:
                return se_restricted_sensitivity_side(z, score, 0.0, m, s);
            default: return 0.0;
        }
    }, {}, {}};

    // re-run the test on a contaminated version of z (already centered)
    TestSpec zero_spec = spec;
    zero_spec.theta0 = 0.0;
    auto flipped = [&](const std::vector<double>& contaminated, int want) {
        auto r = try_run([&] { return run_test(Sample(contaminated), score, zero_spec); });
        return r && r->decision == want;
    };

    auto right_targets_at = [&](int m) {
        std::vector<double> t = {-kInf, z.min()};
        if (spec.scheme.use_a_grid) {
            const double anchor = theta - eta_theta.get(m, Side::minus);
            if (std::isfinite(anchor))
                for (double a : a_grid_offsets(score, spec.scheme.a_levels))
                    t.push_back(anchor - a * score.delta());
        }
        return t;
    };
    auto left_targets_at = [&](int m) {
        std::vector<double> t = {kInf, z.max()};
        if (spec.scheme.use_a_grid) {
            const double anchor = theta + eta_theta.get(m, Side::plus);
            if (std::isfinite(anchor))
                for (double a : a_grid_offsets(score, spec.scheme.a_levels))
                    t.push_back(anchor + a * score.delta());
        }
        return t;
    };

    BpBracket br;
    br.denom = n;

    if (audit.run.decision == 1) {
        const bool right = L > 0.0;  // rejection to the right vs to the left
        if (spec.kind == TestKind::fixed_sigma_wald) {
            // sigma0 fixed: the SE cannot be attacked, so the bracket collapses
            auto [k, ok] = first_m(n, [&](int m) {
                return right ? eta_theta.get(m, Side::minus) >= L
                             : eta_theta.get(m, Side::plus) >= -U;
            });
            br.lower_k = br.upper_k = k;
            br.lower_attained = br.upper_attained = ok;
            br.exact = true;
        } else {
            auto [klo, oklo] = first_m(n, [&](int m) {
                return right ? eta_theta.get(m, Side::minus) + zc * eta_se.get(m, Side::plus) >= L
                             : eta_theta.get(m, Side::plus) + zc * eta_se.get(m, Side::plus) >= -U;
            });
            auto [khi, okhi] = first_m(n, [&](int m) {
                const auto targets = right ? right_targets_at(m) : left_targets_at(m);
                for (double c : targets) {
                    const auto y = right ? replace_right(z.sorted(), m, c)
                                         : replace_left(z.sorted(), m, c);
                    if (flipped(y, 0)) return true;
                }
                return false;
            });
            br.lower_k = klo;
            br.upper_k = okhi ? khi : n;
            br.lower_attained = oklo;
            br.upper_attained = okhi;
        }
        audit.reject_bp = br;
        return audit;
    }

    // acceptance case: push the interval entirely across zero
    const bool can_push_up = spec.sided != Sidedness::one_sided_lower;
    const bool can_push_down = spec.sided != Sidedness::one_sided_upper;

    if (spec.kind == TestKind::fixed_sigma_wald) {
        auto [k, ok] = first_m(n, [&](int m) {
            const bool down = can_push_down && eta_theta.get(m, Side::minus) >= U;
            const bool up = can_push_up && eta_theta.get(m, Side::plus) >= -L;
            return down || up;
        });
        br.lower_k = br.upper_k = k;
        br.lower_attained = br.upper_attained = ok;
        br.exact = true;
        audit.accept_bp = br;
        return audit;
    }

    auto [klo, oklo] = first_m(n, [&](int m) {
        const double se_down = zc * eta_se.get(m, Side::minus);
        const bool down = can_push_down && eta_theta.get(m, Side::minus) + se_down >= U;
        const bool up = can_push_up && eta_theta.get(m, Side::plus) + se_down >= -L;
        return down || up;
    });
    auto [khi, okhi] = first_m(n, [&](int m) {
        if (can_push_down) {
            for (double c : right_targets_at(m))
                if (flipped(replace_right(z.sorted(), m, c), 1)) return true;
        }
        if (can_push_up) {
            for (double c : left_targets_at(m))
                if (flipped(replace_left(z.sorted(), m, c), 1)) return true;
        }
        return false;
    });
    br.lower_k = klo;
    br.upper_k = okhi ? khi : n;
    br.lower_attained = oklo;
    br.upper_attained = okhi;
    audit.accept_bp = br;
    return audit;
}

// ---------------------------------------------------------------- score-test audit

namespace {

struct ScoreStats {
    double v = 0;   // V_n
    double sn = 0;  // empirical plug-in sd of V_n
};

ScoreStats score_stats(const std::vector<double>& values, const ScoreFamily& score) {
    ScoreStats st;
    double v = 0, s2 = 0;
    for (double x : values) {
        const double p = std::isinf(x) ? (x > 0 ? score.psi_pos_inf() : score.psi_neg_inf())
                                       : score.evaluate(x);
        v += p;
        s2 += p * p;
    }
    const double n = double(values.size());
    st.v = v / std::sqrt(n);
    st.sn = std::sqrt(s2 / n);
    return st;
}

}  // namespace

TestAudit score_test_bp(const Sample& sample, const ScoreFamily& score, const TestSpec& spec) {
    if (spec.kind != TestKind::score_test && spec.kind != TestKind::restricted_score)
        throw std::invalid_argument("score_test_bp: score kinds only");
    TestAudit audit;
    audit.run = run_test(sample, score, spec);
    if (audit.run.degenerate) throw std::runtime_error("score_test_bp: degenerate test");

    const Sample z = spec.theta0 != 0.0 ? sample.shifted(-spec.theta0) : sample;
    const int n = int(z.n());
    const double sqn = std::sqrt(double(n));
    const double zc = spec.critical_z();
    const double L = audit.run.lower, U = audit.run.upper;
    const double vn = audit.run.estimate;
    const bool restricted = spec.kind == TestKind::restricted_score;

    // psi values by |x| (for S_n sensitivities) and by value (for V_n)
    const auto& xs = z.sorted();
    std::vector<double> psi_sorted(n);
    for (int i = 0; i < n; ++i) psi_sorted[i] = score.evaluate(xs[i]);
    std::vector<double> psi2_abs(n);
    {
        std::vector<double> z_abs = z.values();
        std::sort(z_abs.begin(), z_abs.end(),
                  [](double a, double b) { return std::fabs(a) < std::fabs(b); });
        for (int i = 0; i < n; ++i) {
            const double p = score.evaluate(z_abs[i]);
            psi2_abs[i] = p * p;
        }
    }
    const double pm = score.psi_max();

    auto eta_v = [&](int m, Side side) {
        if (m == 0) return 0.0;
        if (side == Side::plus) {
            if (std::isinf(score.psi_pos_inf())) return kInf;
            double s = double(m) * score.psi_pos_inf();
            for (int i = m; i < n; ++i) s += psi_sorted[i];
            return s / sqn - vn;
        }
        if (std::isinf(score.psi_neg_inf())) return kInf;
        double s = double(m) * score.psi_neg_inf();
        for (int i = 0; i < n - m; ++i) s += psi_sorted[i];
        return vn - s / sqn;
    };
    auto eta_s = [&](int m, Side side) {
        if (restricted || m == 0) return 0.0;
        const double sn = audit.run.se;
        if (side == Side::plus) {
            if (std::isinf(pm)) return kInf;
            double s = double(m) * pm * pm;
            for (int i = m; i < n; ++i) s += psi2_abs[i];
            return std::sqrt(s / double(n)) - sn;
        }
        double s = 0.0;
        for (int i = 0; i < n - m; ++i) s += psi2_abs[i];
        return sn - std::sqrt(s / double(n));
    };

    TestSpec zero_spec = spec;
    zero_spec.theta0 = 0.0;
    auto rerun = [&](const std::vector<double>& y) {
        return run_test(Sample(y), score, zero_spec);
    };

    BpBracket br;
    br.denom = n;

    if (audit.run.decision == 1) {
        const bool right = L > 0.0;
        auto [klo, oklo] = first_m(n, [&](int m) {
            return right ? eta_v(m, Side::minus) + zc * eta_s(m, Side::plus) >= L
                         : eta_v(m, Side::plus) + zc * eta_s(m, Side::plus) >= -U;
        });
        if (restricted) {
            br.lower_k = br.upper_k = klo;
            br.lower_attained = br.upper_attained = oklo;
            br.exact = true;
        } else {
            auto [khi, okhi] = first_m(n, [&](int m) {
                if (right) {
                    if (rerun(replace_right(z.sorted(), m, -kInf)).decision == 0) return true;
                    if (rerun(replace_right(z.sorted(), m, z.min())).decision == 0) return true;
                } else {
                    if (rerun(replace_left(z.sorted(), m, kInf)).decision == 0) return true;
                    if (rerun(replace_left(z.sorted(), m, z.max())).decision == 0) return true;
                }
                // moving points onto the null value deflates both V_n and S_n
                std::vector<double> by_psi = z.values();
                std::sort(by_psi.begin(), by_psi.end(), [&](double a, double b) {
                    return std::fabs(score.evaluate(a)) > std::fabs(score.evaluate(b));
                });
                std::vector<double> y = by_psi;
                for (int i = 0; i < m; ++i) y[i] = 0.0;
                return rerun(y).decision == 0;
            });
            br.lower_k = klo;
            br.upper_k = okhi ? khi : n;
            br.lower_attained = oklo;
            br.upper_attained = okhi;
        }
        audit.reject_bp = br;
        return audit;
    }

    const bool can_push_up = spec.sided != Sidedness::one_sided_lower;
    const bool can_push_down = spec.sided != Sidedness::one_sided_upper;
    auto [klo, oklo] = first_m(n, [&](int m) {
        const double se_down = zc * eta_s(m, Side::minus);
        const bool down = can_push_down && eta_v(m, Side::minus) + se_down >= U;
        const bool up = can_push_up && eta_v(m, Side::plus) + se_down >= -L;
        return down || up;
    });
    if (restricted) {
        br.lower_k = br.upper_k = klo;
        br.lower_attained = br.upper_attained = oklo;
        br.exact = true;
        audit.accept_bp = br;
        return audit;
    }
    auto [khi, okhi] = first_m(n, [&](int m) {
        if (can_push_down &&
            rerun(replace_right(z.sorted(), m, -kInf)).decision == 1)
            return true;
        if (can_push_up && rerun(replace_left(z.sorted(), m, kInf)).decision == 1) return true;
        return false;
    });
    br.lower_k = klo;
    br.upper_k = okhi ? khi : n;
    br.lower_attained = oklo;
    br.upper_attained = okhi;
    audit.accept_bp = br;
    return audit;
}

// ---------------------------------------------------------------- two-sample audit

namespace {

struct TwoSampleContext {
    const Sample& x;
    const Sample& y;
    const ScoreFamily& score;
    double theta_x, theta_y, se_x, se_y, se_pool;
    SensCache eta_x, eta_y, se_ub_x, se_ub_y;

    TwoSampleContext(const Sample& xx, const Sample& yy, const ScoreFamily& sc)
        : x(xx), y(yy), score(sc) {
        theta_x = solve_location(x, score).theta_hat;
        theta_y = solve_location(y, score).theta_hat;
        se_x = plugin_se(x, score, theta_x);
        se_y = plugin_se(y, score, theta_y);
        se_pool = std::sqrt(se_x * se_x + se_y * se_y);
        eta_x.fn = [this](int m, Side s) {
            return location_sensitivity_side(x, score, theta_x, m, s);
        };
        eta_y.fn = [this](int m, Side s) {
            return location_sensitivity_side(y, score, theta_y, m, s);
        };
        se_ub_x.fn = [this](int m, Side s) {
            return se_plugin_sensitivity_upper_side(x, score, m, s);
        };
        se_ub_y.fn = [this](int m, Side s) {
            return se_plugin_sensitivity_upper_side(y, score, m, s);
        };
    }

    // sensitivity of the contrast theta_x - theta_y at total budget m
    double contrast(int m, Side side, BudgetMode budget) {
        const int nx = int(x.n()), ny = int(y.n());
        const Side sx = side;
        const Side sy = side == Side::plus ? Side::minus : Side::plus;
        if (budget == BudgetMode::per_sample)
            return eta_x.get(std::min(m, nx), sx) + eta_y.get(std::min(m, ny), sy);
        double best = 0.0;
        for (int k1 = 0; k1 <= m; ++k1) {
            const int k2 = m - k1;
            if (k1 > nx || k2 > ny) continue;
            best = std::fmax(best, eta_x.get(k1, sx) + eta_y.get(k2, sy));
        }
        return best;
    }

    // upper bound on the pooled-SE sensitivity at total budget m
    double pooled_se(int m, Side side, BudgetMode budget) {
        auto combine = [&](int k1, int k2) {
            if (side == Side::plus) {
                const double a = se_x + se_ub_x.get(k1, Side::plus);
                const double b = se_y + se_ub_y.get(k2, Side::plus);
                return std::sqrt(a * a + b * b) - se_pool;
            }
            const double a = std::fmax(se_x - se_ub_x.get(k1, Side::minus), 0.0);
            const double b = std::fmax(se_y - se_ub_y.get(k2, Side::minus), 0.0);
            return se_pool - std::sqrt(a * a + b * b);
        };
        const int nx = int(x.n()), ny = int(y.n());
        if (budget == BudgetMode::per_sample) return combine(std::min(m, nx), std::min(m, ny));
        double best = 0.0;
        for (int k1 = 0; k1 <= m; ++k1) {
            const int k2 = m - k1;
            if (k1 > nx || k2 > ny) continue;
            best = std::fmax(best, combine(k1, k2));
        }
        return best;
    }
};

}  // namespace

TestAudit two_sample_bp_bounds(const Sample& x, const Sample& y, const ScoreFamily& score,
                               const TestSpec& spec) {
    if (spec.kind != TestKind::two_sample_wald)
        throw std::invalid_argument("two_sample_bp_bounds: kind must be two_sample_wald");
    TestAudit audit;
    audit.run = run_test(x, y, score, spec);
    if (audit.run.degenerate) throw std::runtime_error("two_sample_bp_bounds: degenerate test");

    const Sample xs = spec.theta0 != 0.0 ? x.shifted(-spec.theta0) : x;
    TwoSampleContext ctx(xs, y, score);
    const int n_star = int(std::min(x.n(), y.n()));
    const double zc = spec.critical_z();
    const double L = audit.run.lower, U = audit.run.upper;

    TestSpec zero_spec = spec;
    zero_spec.theta0 = 0.0;
    auto flips2 = [&](const std::vector<double>& cx, const std::vector<double>& cy, int want) {
        auto r = try_run([&] { return run_test(Sample(cx), Sample(cy), score, zero_spec); });
        return r && r->decision == want;
    };

    auto split_flip = [&](int m, bool lower_x, int want_decision) {
        // lower_x: send x's tail down and y's up (decreases the contrast)
        const int nx = int(xs.n()), ny = int(y.n());
        auto try_pair = [&](int k1, int k2) {
            std::vector<double> tx = lower_x ? replace_right(xs.sorted(), k1, -kInf)
                                             : replace_left(xs.sorted(), k1, kInf);
            std::vector<double> ty = lower_x ? replace_left(y.sorted(), k2, kInf)
                                             : replace_right(y.sorted(), k2, -kInf);
            if (flips2(tx, ty, want_decision)) return true;
            // finite edge targets
            std::vector<double> tx2 = lower_x ? replace_right(xs.sorted(), k1, xs.min())
                                              : replace_left(xs.sorted(), k1, xs.max());
            std::vector<double> ty2 = lower_x ? replace_left(y.sorted(), k2, y.max())
                                              : replace_right(y.sorted(), k2, y.min());
            return flips2(tx2, ty2, want_decision) || flips2(tx, ty2, want_decision) ||
                   flips2(tx2, ty, want_decision);
        };
        if (spec.budget == BudgetMode::per_sample)
            return try_pair(std::min(m, nx), std::min(m, ny));
        for (int k1 = 0; k1 <= m; ++k1) {
            const int k2 = m - k1;
            if (k1 > nx || k2 > ny) continue;
            if (try_pair(k1, k2)) return true;
        }
        return false;
    };

    BpBracket br;
    br.denom = n_star;
    const int scan_cap = int(std::max(x.n(), y.n())) * 2;

    if (audit.run.decision == 1) {
        const bool right = L > 0.0;
        auto [klo, oklo] = first_m(scan_cap, [&](int m) {
            const double se_up = zc * ctx.pooled_se(m, Side::plus, spec.budget);
            return right ? ctx.contrast(m, Side::minus, spec.budget) + se_up >= L
                         : ctx.contrast(m, Side::plus, spec.budget) + se_up >= -U;
        });
        auto [khi, okhi] =
            first_m(scan_cap, [&](int m) { return split_flip(m, right, 0); });
        br.lower_k = klo;
        br.upper_k = okhi ? khi : scan_cap;
        br.lower_attained = oklo;
        br.upper_attained = okhi;
        audit.reject_bp = br;
        return audit;
    }

    const bool can_push_up = spec.sided != Sidedness::one_sided_lower;
    const bool can_push_down = spec.sided != Sidedness::one_sided_upper;
    auto [klo, oklo] = first_m(scan_cap, [&](int m) {
        const double se_down = zc * ctx.pooled_se(m, Side::minus, spec.budget);
        const bool down = can_push_down && ctx.contrast(m, Side::minus, spec.budget) + se_down >= U;
        const bool up = can_push_up && ctx.contrast(m, Side::plus, spec.budget) + se_down >= -L;
        return down || up;
    });
    auto [khi, okhi] = first_m(scan_cap, [&](int m) {
        return (can_push_down && split_flip(m, true, 1)) ||
               (can_push_up && split_flip(m, false, 1));
    });
    br.lower_k = klo;
    br.upper_k = okhi ? khi : scan_cap;
    br.lower_attained = oklo;
    br.upper_attained = okhi;
    audit.accept_bp = br;
    return audit;
}

// ---------------------------------------------------------------- statistic band

StatisticBand statistic_band(const Sample& x, const Sample& y, const ScoreFamily& score, int m,
                             const TestSpec& spec) {
    StatisticBand band;
    TestSpec two = spec;
    two.kind = TestKind::two_sample_wald;
    RunResult base = run_test(x, y, score, two);
    if (m == 0) {
        band.low = band.high = base.statistic;
        band.x_low = x.values();
        band.y_low = y.values();
        return band;
    }
    const Sample xs = spec.theta0 != 0.0 ? x.shifted(-spec.theta0) : x;
    TwoSampleContext ctx(xs, y, score);

    // attainable low: explicit contaminations dragging the contrast down while
    // inflating the pooled SE
    band.low = base.statistic;
    band.x_low = xs.values();
    band.y_low = y.values();
    TestSpec zero_spec = two;
    zero_spec.theta0 = 0.0;
    auto consider = [&](const std::vector<double>& cx, const std::vector<double>& cy) {
        auto r = try_run([&] { return run_test(Sample(cx), Sample(cy), score, zero_spec); });
        if (!r) return;
        const double t = r->degenerate ? (r->estimate > 0 ? kInf : -kInf) : r->statistic;
        if (t < band.low) {
            band.low = t;
            band.x_low = cx;
            band.y_low = cy;
        }
    };
    auto targets_x = [&](int k1) {
        std::vector<double> t = {-kInf, xs.min()};
        if (spec.scheme.use_a_grid) {
            const double anchor = ctx.theta_x - ctx.eta_x.get(k1, Side::minus);
            if (std::isfinite(anchor))
                for (double a : a_grid_offsets(score, spec.scheme.a_levels))
                    t.push_back(anchor - a * score.delta());
        }
        return t;
    };
    auto targets_y = [&](int k2) {
        std::vector<double> t = {kInf, y.max()};
        if (spec.scheme.use_a_grid) {
            const double anchor = ctx.theta_y + ctx.eta_y.get(k2, Side::plus);
            if (std::isfinite(anchor))
                for (double a : a_grid_offsets(score, spec.scheme.a_levels))
                    t.push_back(anchor + a * score.delta());
        }
        return t;
    };
    auto splits = [&](const std::function<void(int, int)>& fn) {
        const int nx = int(xs.n()), ny = int(y.n());
        if (spec.budget == BudgetMode::per_sample) {
            fn(std::min(m, nx), std::min(m, ny));
            return;
        }
        for (int k1 = 0; k1 <= m; ++k1) {
            const int k2 = m - k1;
            if (k1 > nx || k2 > ny) continue;
            fn(k1, k2);
        }
    };
    splits([&](int k1, int k2) {
        for (double cx : targets_x(k1))
            for (double cy : targets_y(k2))
                consider(replace_right(xs.sorted(), k1, cx), replace_left(y.sorted(), k2, cy));
    });

    // conservative high
    const double d_max = base.estimate + ctx.contrast(m, Side::plus, spec.budget);
    const double se_min =
        std::fmax(ctx.se_pool - ctx.pooled_se(m, Side::minus, spec.budget), 0.0);
    const double se_max = ctx.se_pool + ctx.pooled_se(m, Side::plus, spec.budget);
    if (d_max > 0.0)
        band.high = se_min > 0.0 ? d_max / se_min : kInf;
    else
        band.high = std::isfinite(se_max) && se_max > 0.0 ? d_max / se_max : 0.0;
    if (band.high < band.low) band.high = band.low;  // numeric guard at m ~ 0 boundary
    return band;
}

// ---------------------------------------------------------------- two-stage SE bound

double two_stage_test_se_upper_side(const Sample& sample, const ScoreFamily& score,
                                    const ScaleScoreFamily& chi, int m, Side side) {
    const int n = int(sample.n());
    if (m < 0 || m > n) throw std::domain_error("two_stage_test_se_upper: m out of range");
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(two_stage_test_se_upper_side(sample, score, chi, m, Side::plus),
                         two_stage_test_se_upper_side(sample, score, chi, m, Side::minus));
    if (!score.bounded()) return side == Side::plus ? kInf : 0.0;

    const FitResult fit = solve_two_stage(sample, score, chi);
    const double theta = fit.theta_hat;
    const double sigma = *fit.sigma_hat;
    const double ratio = plugin_se_ratio(sample, score, theta, sigma);

    const double sg_minus = scale_sensitivity_side(sample, chi, sigma, m, Side::minus);
    const double sg_plus = scale_sensitivity_side(sample, chi, sigma, m, Side::plus);
    const double sg_two = std::fmax(sg_minus, sg_plus);
    const double kappa = sigma - sg_minus;  // deflated scale
    if (!(kappa > 0.0)) return side == Side::plus ? kInf : ratio;
    const double sig_hi = sigma + sg_plus;

    const double th_plus = two_stage_sensitivity_upper(sample, score, chi, m, Side::plus);
    const double th_minus = two_stage_sensitivity_upper(sample, score, chi, m, Side::minus);
    const double th_two = std::fmax(th_plus, th_minus);

    const double pm = score.psi_max();
    const double dp0 = score.deriv_at_zero();
    double abs_sum = 0.0;
    for (double v : sample.values()) abs_sum += std::fabs(v) + std::fabs(theta);
    const double c_shift =
        2.0 * pm * dp0 *
        (sg_two / (kappa * sigma) * abs_sum + double(n) * (std::isinf(th_two) ? kInf : th_two) / kappa);

    // |x - theta| ascending
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = sample.values()[i] - theta;
    std::sort(r.begin(), r.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); });

    // S_{m+-} with the two-stage location envelopes
    const auto& xs = sample.sorted();
    int s1 = 0, s2 = 0;
    for (int i = 0; i < n - m; ++i)
        if (theta + th_plus >= 2.0 * xs[i] - theta) ++s1;
    for (int i = m; i < n; ++i)
        if (theta - th_minus <= 2.0 * xs[i] - theta) ++s2;
    const int s_plus = std::max(s1, s2);
    int above = 0, below = 0;
    for (double v : xs) {
        if (v >= theta) ++above;
        if (v <= theta) ++below;
    }
    const int s_minus = std::max(std::max(above, below) - m, 0);
    const double mod = score.deriv_modulus(std::isinf(th_two) || std::isinf(kappa)
                                               ? 1e300
                                               : th_two / kappa);

    const bool huber = score.kind() == ScoreKind::huber;
    auto band_change = [&](double scale_new, double scale_old, bool want_min) {
        // count change of {|(x - t)/s| <= delta} between (t=theta, s=scale_old)
        // and t ranging over the location envelope with s=scale_new
        const double delta = score.delta();
        auto count_at = [&](double t, double s) {
            if (!(s > 0.0) || std::isinf(s)) return std::isinf(s) ? n : 0;
            int c = 0;
            for (double v : xs)
                if (std::fabs((v - t) / s) <= delta) ++c;
            return c;
        };
        const int base = count_at(theta, scale_old);
        double lo = theta - th_minus, hi = theta + th_plus;
        const double far = std::fabs(theta) + std::fabs(sample.min()) + std::fabs(sample.max()) +
                           2.0 * delta * (std::isinf(scale_new) ? 1.0 : scale_new) + 1.0;
        if (!std::isfinite(lo)) lo = -far;
        if (!std::isfinite(hi)) hi = far;
        std::set<double> cand = {lo, hi};
        if (std::isfinite(scale_new) && scale_new > 0.0)
            for (double v : xs)
                for (double b : {v - delta * scale_new, v + delta * scale_new})
                    if (b > lo && b < hi) cand.insert(b);
        std::vector<double> pts(cand.begin(), cand.end());
        std::vector<double> eval = pts;
        for (std::size_t i = 1; i < pts.size(); ++i) eval.push_back(0.5 * (pts[i - 1] + pts[i]));
        int best = want_min ? n : -n;
        for (double t : eval) {
            const int d = count_at(t, scale_new) - base;
            best = want_min ? std::min(best, d) : std::max(best, d);
        }
        return want_min ? std::min(best, 0) : std::max(best, 0);
    };

    if (side == Side::plus) {
        double num = 5.0 * double(m) * pm * pm + c_shift;
        double den_base = 0.0;
        for (int i = m; i < n; ++i) {
            const double p = score.evaluate(r[i] / sigma);
            num += p * p;
            den_base += score.derivative(r[i] / kappa);
        }
        double den = den_base - double(s_plus) * mod;
        if (huber) {
            const int q_plus = band_change(kappa, sig_hi, /*want_min=*/true);
            den = std::fmax(den, den_base + dp0 * double(q_plus - m));
        }
        den = std::fmax(den, 0.0);
        if (!(den > 0.0) || std::isinf(num)) return kInf;
        return std::fmax(std::sqrt(num) / den - ratio, 0.0);
    }

    double num = -4.0 * double(m) * pm * pm - c_shift;
    double den_base = double(m) * dp0;
    for (int i = 0; i < n - m; ++i) {
        const double p = score.evaluate(r[i] / sigma);
        num += p * p;
        den_base += score.derivative(std::isinf(sig_hi) ? 0.0 : r[i] / sig_hi);
    }
    num = std::fmax(num, 0.0);
    double den = den_base + double(s_minus) * mod;
    if (huber) {
        const int q_minus = band_change(sig_hi, kappa, /*want_min=*/false);
        den = std::fmin(den, den_base + dp0 * double(q_minus + m));
    }
    if (!(den > 0.0)) return ratio;
    return std::fmax(ratio - std::sqrt(num) / den, 0.0);
}

SensitivityPoint two_stage_test_se_upper(const Sample& sample, const ScoreFamily& score,
                                         const ScaleScoreFamily& chi, int m) {
    SensitivityPoint p;
    p.m = m;
    p.kind = ValueKind::upper_bound;
    p.eta_plus = two_stage_test_se_upper_side(sample, score, chi, m, Side::plus);
    p.eta_minus = two_stage_test_se_upper_side(sample, score, chi, m, Side::minus);
    p.finish();
    return p;
}

}  // namespace robustbp
