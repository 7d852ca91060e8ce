#include "robustbp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace robustbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> candidate_values(const Sample& sample, const OracleConfig& config,
                                     double center) {
    std::vector<double> c = {kInf, -kInf};
    for (double v : sample.values()) c.push_back(v);
    const double s = std::fmax(1.0, sample.finite_spread());
    for (double q : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        c.push_back(center + q * s);
        c.push_back(center - q * s);
    }
    c.push_back(center);
    c.push_back(0.0);
    for (double v : config.extra_candidates) c.push_back(v);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

void for_each_subset(int n, int m, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    if (m == 0) {
        fn(idx);
        return;
    }
    for (;;) {
        fn(idx);
        int i = m - 1;
        while (i >= 0 && idx[i] == n - m + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// evaluates the contaminated target with the given root-selection convention
struct TargetEval {
    const OracleTarget& target;
    const ScoreFamily& score;
    const std::optional<ScaleScoreFamily>& chi;
    Side side;
    double base;  // uncontaminated value (midpoint convention)

    double displacement(const std::vector<double>& contaminated) const {
        Sample y(contaminated);
        try {
            switch (target.kind) {
                case OracleTarget::Kind::location: {
                    FitResult f = solve_location(y, score,
                                                 side == Side::plus ? RootSelect::largest
                                                                    : RootSelect::smallest);
                    return side == Side::plus ? f.theta_hat - base : base - f.theta_hat;
                }
                case OracleTarget::Kind::scale: {
                    FitResult f = solve_scale(y, *chi,
                                              side == Side::plus ? RootSelect::largest
                                                                 : RootSelect::smallest);
                    return side == Side::plus ? *f.sigma_hat - base : base - *f.sigma_hat;
                }
                case OracleTarget::Kind::two_stage: {
                    FitResult f = solve_two_stage(y, score, *chi,
                                                  side == Side::plus ? RootSelect::largest
                                                                     : RootSelect::smallest);
                    return side == Side::plus ? f.theta_hat - base : base - f.theta_hat;
                }
                case OracleTarget::Kind::se_plugin: {
                    FitResult f = solve_location(y, score);
                    if (f.breakdown) return -kInf;
                    double se;
                    try {
                        se = plugin_se(y, score, f.theta_hat);
                    } catch (const std::domain_error&) {
                        se = kInf;  // zero information: the SE escapes upward
                    }
                    return side == Side::plus ? se - base : base - se;
                }
                case OracleTarget::Kind::se_restricted: {
                    double se;
                    try {
                        se = plugin_se(y, score, target.theta0);
                    } catch (const std::domain_error&) {
                        se = kInf;
                    }
                    return side == Side::plus ? se - base : base - se;
                }
            }
        } catch (const std::domain_error&) {
            return -kInf;  // degenerate contaminations cannot realize the sup
        }
        return -kInf;
    }
};

struct ArgMax {
    double arg;
    double val;
};

// pre-scan to bracket the global cell, then golden-section inside it
ArgMax golden_argmax(const std::function<double(double)>& f, double lo, double hi, int iters) {
    const int pre = 48;
    double best_c = lo, best_v = f(lo);
    for (int k = 1; k <= pre; ++k) {
        const double c = lo + (hi - lo) * k / pre;
        const double v = f(c);
        if (v > best_v) {
            best_v = v;
            best_c = c;
        }
    }
    const double cell = (hi - lo) / pre;
    double a = std::fmax(lo, best_c - cell), b = std::fmin(hi, best_c + cell);
    const double phi = 0.6180339887498949;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    ArgMax out{0.5 * (a + b), 0.0};
    out.val = f(out.arg);
    if (fc > out.val) {
        out.val = fc;
        out.arg = b - phi * (b - a);
    }
    if (fd > out.val) {
        out.val = fd;
        out.arg = a + phi * (b - a);
    }
    if (best_v > out.val) {
        out.val = best_v;
        out.arg = best_c;
    }
    return out;
}

}  // namespace

double brute_force_sensitivity(const Sample& sample, const OracleTarget& target,
                               const ScoreFamily& score,
                               const std::optional<ScaleScoreFamily>& chi, int m, Side side,
                               const OracleConfig& config) {
    const int n = int(sample.n());
    if (n > config.max_n)
        throw std::domain_error("brute_force_sensitivity: instance larger than max_n");
    if (m < 0 || m > n) throw std::domain_error("brute_force_sensitivity: m out of range");
    if (side == Side::two_sided)
        return std::fmax(
            brute_force_sensitivity(sample, target, score, chi, m, Side::plus, config),
            brute_force_sensitivity(sample, target, score, chi, m, Side::minus, config));
    if (m == 0) return 0.0;
    if ((target.kind == OracleTarget::Kind::scale ||
         target.kind == OracleTarget::Kind::two_stage) &&
        !chi)
        throw std::invalid_argument("brute_force_sensitivity: target needs a chi family");

    TargetEval eval{target, score, chi, side, 0.0};
    switch (target.kind) {
        case OracleTarget::Kind::location:
            eval.base = solve_location(sample, score).theta_hat;
            break;
        case OracleTarget::Kind::scale:
            eval.base = *solve_scale(sample, *chi).sigma_hat;
            break;
        case OracleTarget::Kind::two_stage:
            eval.base = solve_two_stage(sample, score, chi ? *chi : *chi).theta_hat;
            break;
        case OracleTarget::Kind::se_plugin:
            eval.base = plugin_se(sample, score, solve_location(sample, score).theta_hat);
            break;
        case OracleTarget::Kind::se_restricted:
            eval.base = plugin_se(sample, score, target.theta0);
            break;
    }

    const double center = target.kind == OracleTarget::Kind::se_restricted
                              ? target.theta0
                              : solve_location(sample, score).theta_hat;
    const std::vector<double> cand = candidate_values(sample, config, center);
    const bool mixed = config.assign == OracleConfig::Assign::full;

    double best = 0.0;
    std::vector<double> best_y;
    std::vector<double> work(sample.values());

    for_each_subset(n, m, [&](const std::vector<int>& subset) {
        if (!mixed) {
            for (double c : cand) {
                work = sample.values();
                for (int i : subset) work[i] = c;
                const double d = eval.displacement(work);
                if (d > best) {
                    best = d;
                    best_y = work;
                }
            }
            return;
        }
        // odometer over candidate assignments
        std::vector<std::size_t> pick(m, 0);
        for (;;) {
            work = sample.values();
            for (int j = 0; j < m; ++j) work[subset[j]] = cand[pick[j]];
            const double d = eval.displacement(work);
            if (d > best) {
                best = d;
                best_y = work;
            }
            int j = m - 1;
            while (j >= 0 && ++pick[j] == cand.size()) pick[j--] = 0;
            if (j < 0) break;
        }
    });

    if (config.refine && !best_y.empty()) {
        // coordinate-wise continuous refinement around the best grid placement
        const double span = std::fmax(1.0, sample.finite_spread());
        for (int pass = 0; pass < 3; ++pass) {
            for (std::size_t i = 0; i < best_y.size(); ++i) {
                const bool replaced = best_y[i] != sample.values()[i];
                if (!replaced || std::isinf(best_y[i])) continue;
                const double v0 = best_y[i];
                auto f = [&](double c) {
                    std::vector<double> y = best_y;
                    y[i] = c;
                    return eval.displacement(y);
                };
                const ArgMax am = golden_argmax(f, v0 - span, v0 + span, 80);
                if (am.val > best) {
                    best_y[i] = am.arg;
                    best = am.val;
                }
            }
        }
    }
    return std::isinf(best) && best < 0 ? 0.0 : best;
}

// ------------------------------------------------------------ test-flip oracle

namespace {

// flip margin: >= 0 iff the contaminated test reaches the wanted decision
double flip_margin(const RunResult& r, int want, Sidedness sided) {
    if (want == 0) {
        // want acceptance: 0 inside the relevant interval
        switch (sided) {
            case Sidedness::two_sided: return std::fmin(-r.lower, r.upper);
            case Sidedness::one_sided_upper: return -r.lower;
            case Sidedness::one_sided_lower: return r.upper;
        }
    }
    switch (sided) {
        case Sidedness::two_sided: return std::fmax(r.lower, -r.upper);
        case Sidedness::one_sided_upper: return r.lower;
        case Sidedness::one_sided_lower: return -r.upper;
    }
    return -kInf;
}

}  // namespace

OracleBp brute_force_test_bp(const Sample& sample, const ScoreFamily& score,
                             const TestSpec& spec, const OracleConfig& config) {
    const int n = int(sample.n());
    if (n > config.max_n) throw std::domain_error("brute_force_test_bp: instance too large");
    const RunResult base = run_test(sample, score, spec);
    const int want = base.decision ? 0 : 1;
    TestSpec zspec = spec;
    zspec.theta0 = 0.0;
    const Sample z = spec.theta0 != 0.0 ? sample.shifted(-spec.theta0) : sample;
    const double center = solve_location(z, score).theta_hat;
    const std::vector<double> cand = candidate_values(z, config, center);

    auto margin_of = [&](const std::vector<double>& y) -> double {
        try {
            const RunResult r = run_test(Sample(y), score, zspec);
            if (r.decision == want) return std::fmax(flip_margin(r, want, spec.sided), 0.0);
            return flip_margin(r, want, spec.sided);
        } catch (const std::domain_error&) {
            return -kInf;
        }
    };

    OracleBp out;
    out.denom = n;
    const int cap = (n + 1) / 2;
    for (int m = 1; m <= cap; ++m) {
        bool flipped = false;
        for_each_subset(n, m, [&](const std::vector<int>& subset) {
            if (flipped) return;
            std::vector<std::size_t> pick(m, 0);
            for (;;) {
                std::vector<double> y = z.values();
                for (int j = 0; j < m; ++j) y[subset[j]] = cand[pick[j]];
                if (margin_of(y) >= 0.0) {
                    flipped = true;
                    return;
                }
                int j = m - 1;
                while (j >= 0 && ++pick[j] == cand.size()) pick[j--] = 0;
                if (j < 0) break;
            }
            // common-value refinement: maximize the flip margin over one shared c
            auto common = [&](double c) {
                std::vector<double> y = z.values();
                for (int i : subset) y[i] = c;
                return margin_of(y);
            };
            const double span = std::fmax(1.0, z.finite_spread());
            double best_c = 0.0, best_v = -kInf;
            for (int k = 0; k <= 64; ++k) {
                const double c = center - 4.0 * span + 8.0 * span * k / 64.0;
                const double v = common(c);
                if (v > best_v) {
                    best_v = v;
                    best_c = c;
                }
            }
            if (best_v >= 0.0 ||
                golden_argmax(common, best_c - span / 4.0, best_c + span / 4.0, 60).val >= 0.0)
                flipped = true;
        });
        if (flipped) {
            out.k = m;
            return out;
        }
    }
    out.k = cap;
    out.flipped = false;
    return out;
}

OracleBp brute_force_test_bp(const Sample& x, const Sample& y, const ScoreFamily& score,
                             const TestSpec& spec, const OracleConfig& config) {
    const int nx = int(x.n()), ny = int(y.n());
    if (nx > config.max_n || ny > config.max_n)
        throw std::domain_error("brute_force_test_bp: instance too large");
    const RunResult base = run_test(x, y, score, spec);
    const int want = base.decision ? 0 : 1;
    TestSpec zspec = spec;
    zspec.theta0 = 0.0;
    const Sample xs = spec.theta0 != 0.0 ? x.shifted(-spec.theta0) : x;
    const std::vector<double> cand_x =
        candidate_values(xs, config, solve_location(xs, score).theta_hat);
    const std::vector<double> cand_y =
        candidate_values(y, config, solve_location(y, score).theta_hat);

    auto flips = [&](const std::vector<double>& cx, const std::vector<double>& cy) {
        try {
            return run_test(Sample(cx), Sample(cy), score, zspec).decision == want;
        } catch (const std::domain_error&) {
            return false;
        }
    };

    const int n_star = std::min(nx, ny);
    OracleBp out;
    out.denom = n_star;
    const int cap = (n_star + 1) / 2;

    auto search_pair = [&](int k1, int k2) {
        bool found = false;
        for_each_subset(nx, k1, [&](const std::vector<int>& sx) {
            if (found) return;
            std::vector<std::size_t> px(std::max(k1, 1), 0);
            for (;;) {
                std::vector<double> cx = xs.values();
                for (int j = 0; j < k1; ++j) cx[sx[j]] = cand_x[px[j]];
                for_each_subset(ny, k2, [&](const std::vector<int>& sy) {
                    if (found) return;
                    std::vector<std::size_t> py(std::max(k2, 1), 0);
                    for (;;) {
                        std::vector<double> cy = y.values();
                        for (int j = 0; j < k2; ++j) cy[sy[j]] = cand_y[py[j]];
                        if (flips(cx, cy)) {
                            found = true;
                            return;
                        }
                        int j = k2 - 1;
                        while (j >= 0 && ++py[j] == cand_y.size()) py[j--] = 0;
                        if (j < 0 || k2 == 0) break;
                    }
                });
                if (found) return;
                int j = k1 - 1;
                while (j >= 0 && ++px[j] == cand_x.size()) px[j--] = 0;
                if (j < 0 || k1 == 0) break;
            }
        });
        return found;
    };

    for (int m = 1; m <= cap; ++m) {
        bool flipped = false;
        if (config.budget == BudgetMode::per_sample) {
            flipped = search_pair(std::min(m, nx), std::min(m, ny));
        } else {
            for (int k1 = 0; k1 <= m && !flipped; ++k1) {
                const int k2 = m - k1;
                if (k1 > nx || k2 > ny) continue;
                flipped = search_pair(k1, k2);
            }
        }
        if (flipped) {
            out.k = m;
            return out;
        }
    }
    out.k = cap;
    out.flipped = false;
    return out;
}

}  // namespace robustbp
