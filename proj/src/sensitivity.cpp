#include "robustbp/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "robustbp/roots.hpp"
#include "robustbp/tolerances.hpp"

namespace robustbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double psi_at(const ScoreFamily& score, double arg) { return score.evaluate(arg); }

// largest eta >= 0 with f(eta) >= 0, for nonincreasing f with f(0) >= 0.
// Returns +inf when no sign change is found within the doubling cap.
double largest_nonneg_root(const std::function<double(double)>& f, double radius0) {
    double hi = radius0 > 0 ? radius0 : 1.0;
    if (f(hi) >= 0.0) {
        int k = 0;
        for (; k < tol::max_bracket_doublings && f(hi) >= 0.0; ++k) hi *= 2.0;
        if (k == tol::max_bracket_doublings && f(hi) >= 0.0) return kInf;
    }
    return shrink_upper_edge(f, 0.0, hi);
}

}  // namespace

void SensitivityPoint::finish() {
    eta_two_sided = std::fmax(eta_plus, eta_minus);
    breakdown = std::isinf(eta_plus) || std::isinf(eta_minus);
}

std::vector<double> a_grid_offsets(const ScoreFamily& score, const std::vector<double>& levels) {
    std::vector<double> out;
    const double delta = score.delta();
    for (double lv : levels) {
        const double target = lv * delta;  // want psi_delta(a*delta) == lv*delta
        if (std::fabs(lv) >= 1.0) {
            // attainable only where psi saturates exactly (huber); otherwise the
            // +-inf targets already cover the saturated direction
            if (score.kind() == ScoreKind::huber) out.push_back(lv);
            continue;
        }
        // psi monotone: bisect a in [-R, R]
        double lo = -1.0, hi = 1.0;
        while (psi_at(score, hi * delta) < target && hi < 1e6) hi *= 2.0;
        while (psi_at(score, lo * delta) > target && lo > -1e6) lo *= 2.0;
        for (int it = 0; it < tol::max_bisect_iter && hi - lo > bisect_width_tol(lo, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (psi_at(score, mid * delta) < target ? lo : hi) = mid;
        }
        out.push_back(0.5 * (lo + hi));
    }
    return out;
}

// ---------------------------------------------------------------- location

double location_sensitivity_side(const Sample& sample, const ScoreFamily& score,
                                 double theta_hat, int m, Side side) {
    const int n = int(sample.n());
    if (m < 0 || m > n) throw std::domain_error("location_sensitivity: m out of range");
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(location_sensitivity_side(sample, score, theta_hat, m, Side::plus),
                         location_sensitivity_side(sample, score, theta_hat, m, Side::minus));
    const auto& xs = sample.sorted();
    const double psi_p = score.psi_pos_inf();
    const double psi_n = score.psi_neg_inf();
    const double radius = std::fmax(1.0, sample.finite_spread()) + 1.0;

    if (side == Side::plus) {
        if (std::isinf(psi_p)) return kInf;
        if (double(n - m) * psi_n + double(m) * psi_p >= 0.0) return kInf;
        auto trimmed = [&](double eta) {
            double s = double(m) * psi_p;
            for (int i = m; i < n; ++i) s += psi_at(score, xs[i] - theta_hat - eta);
            return s;
        };
        return largest_nonneg_root(trimmed, radius);
    }
    // minus side
    if (std::isinf(psi_n)) return kInf;
    if (double(n - m) * psi_p + double(m) * psi_n <= 0.0) return kInf;
    auto trimmed_neg = [&](double eta) {
        double s = double(m) * psi_n;
        for (int i = 0; i < n - m; ++i) s += psi_at(score, xs[i] - theta_hat + eta);
        return -s;  // nonincreasing in eta; want largest eta with s <= 0
    };
    return largest_nonneg_root(trimmed_neg, radius);
}

SensitivityPoint location_sensitivity(const Sample& sample, const ScoreFamily& score,
                                      double theta_hat, int m) {
    SensitivityPoint p;
    p.m = m;
    p.eta_plus = location_sensitivity_side(sample, score, theta_hat, m, Side::plus);
    p.eta_minus = location_sensitivity_side(sample, score, theta_hat, m, Side::minus);
    p.finish();
    return p;
}

BreakdownResult location_bp(const Sample& sample, const ScoreFamily& score, double theta_hat,
                            double eta, Side side) {
    if (!(eta > 0.0)) throw std::domain_error("location_bp: eta must be positive");
    const int n = int(sample.n());
    const auto& xs = sample.sorted();
    BreakdownResult r;
    r.eta = eta;
    r.side = side;
    r.n = n;

    if (side == Side::two_sided) {
        BreakdownResult a = location_bp(sample, score, theta_hat, eta, Side::plus);
        BreakdownResult b = location_bp(sample, score, theta_hat, eta, Side::minus);
        r = (a.k <= b.k) ? a : b;
        r.side = Side::two_sided;
        return r;
    }

    if (side == Side::plus) {
        if (std::isinf(score.psi_pos_inf())) {
            r.k = 1;
            return r;
        }
        // suffix[i] = sum_{j >= i} psi(x_(j) - (theta+eta)), 0-based
        std::vector<double> suffix(n + 1, 0.0);
        for (int i = n - 1; i >= 0; --i)
            suffix[i] = suffix[i + 1] + psi_at(score, xs[i] - theta_hat - eta);
        for (int m = 1; m <= n; ++m) {
            if (suffix[m] + double(m) * score.psi_pos_inf() >= 0.0) {
                r.k = m;
                return r;
            }
        }
    } else {
        if (std::isinf(score.psi_neg_inf())) {
            r.k = 1;
            return r;
        }
        std::vector<double> prefix(n + 1, 0.0);
        for (int i = 0; i < n; ++i)
            prefix[i + 1] = prefix[i] + psi_at(score, xs[i] - theta_hat + eta);
        for (int m = 1; m <= n; ++m) {
            if (prefix[n - m] + double(m) * score.psi_neg_inf() <= 0.0) {
                r.k = m;
                return r;
            }
        }
    }
    r.k = n;
    r.attained = false;
    return r;
}

// ---------------------------------------------------------------- scale

namespace {

// chi terms evaluated against sorted |x| with the eta -> sigma limit built in
double scale_trim_plus(const std::vector<double>& abs_sorted, const ScaleScoreFamily& chi,
                       double sigma, double eta, int m) {
    const int n = int(abs_sorted.size());
    double s = double(m) * chi.chi_pos_inf();
    for (int i = m; i < n; ++i) {
        const double a = abs_sorted[i];
        s += std::isinf(a) ? chi.chi_pos_inf() : chi.evaluate(a / (sigma + eta));
    }
    return s;
}

double scale_trim_minus(const std::vector<double>& abs_sorted, const ScaleScoreFamily& chi,
                        double sigma, double eta, int m) {
    const int n = int(abs_sorted.size());
    double s = double(m) * chi.chi_at_zero();
    const double denom = sigma - eta;
    for (int i = 0; i < n - m; ++i) {
        const double a = abs_sorted[i];
        if (a == 0.0)
            s += chi.chi_at_zero();
        else if (std::isinf(a) || denom <= 0.0)
            s += chi.chi_pos_inf();
        else
            s += chi.evaluate(a / denom);
    }
    return s;
}

std::vector<double> abs_sorted_values(const Sample& sample) {
    std::vector<double> a;
    a.reserve(sample.n());
    for (double v : sample.values()) a.push_back(std::fabs(v));
    std::sort(a.begin(), a.end());
    return a;
}

}  // namespace

double scale_sensitivity_side(const Sample& sample, const ScaleScoreFamily& chi,
                              double sigma_hat, int m, Side side) {
    const int n = int(sample.n());
    if (m < 0 || m > n) throw std::domain_error("scale_sensitivity: m out of range");
    if (!(sigma_hat > 0.0)) throw std::domain_error("scale_sensitivity: sigma_hat <= 0");
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(scale_sensitivity_side(sample, chi, sigma_hat, m, Side::plus),
                         scale_sensitivity_side(sample, chi, sigma_hat, m, Side::minus));
    const std::vector<double> a = abs_sorted_values(sample);

    if (side == Side::plus) {
        if (std::isinf(chi.chi_pos_inf())) return kInf;
        if (double(n - m) * chi.chi_at_zero() + double(m) * chi.chi_pos_inf() >= 0.0) return kInf;
        auto f = [&](double eta) { return scale_trim_plus(a, chi, sigma_hat, eta, m); };
        return largest_nonneg_root(f, sigma_hat + 1.0);
    }
    // minus: eta restricted to [0, sigma_hat]; nondecreasing condition <= 0
    auto f = [&](double eta) { return -scale_trim_minus(a, chi, sigma_hat, eta, m); };
    if (f(sigma_hat) >= 0.0) return sigma_hat;  // total implosion reachable
    return shrink_upper_edge(f, 0.0, sigma_hat);
}

SensitivityPoint scale_sensitivity(const Sample& sample, const ScaleScoreFamily& chi,
                                   double sigma_hat, int m) {
    SensitivityPoint p;
    p.m = m;
    p.eta_plus = scale_sensitivity_side(sample, chi, sigma_hat, m, Side::plus);
    p.eta_minus = scale_sensitivity_side(sample, chi, sigma_hat, m, Side::minus);
    p.finish();
    return p;
}

BreakdownResult scale_bp(const Sample& sample, const ScaleScoreFamily& chi, double sigma_hat,
                         double eta, Side side) {
    if (!(eta > 0.0)) throw std::domain_error("scale_bp: eta must be positive");
    const int n = int(sample.n());
    BreakdownResult r;
    r.eta = eta;
    r.side = side;
    r.n = n;
    if (side == Side::two_sided) {
        BreakdownResult a = scale_bp(sample, chi, sigma_hat, eta, Side::plus);
        BreakdownResult b = scale_bp(sample, chi, sigma_hat, eta, Side::minus);
        r = (!b.attained || (a.attained && a.k <= b.k)) ? a : b;
        r.side = Side::two_sided;
        return r;
    }
    const std::vector<double> a = abs_sorted_values(sample);
    if (side == Side::plus) {
        if (std::isinf(chi.chi_pos_inf())) {
            r.k = 1;
            return r;
        }
        for (int m = 1; m <= n; ++m)
            if (scale_trim_plus(a, chi, sigma_hat, eta, m) >= 0.0) {
                r.k = m;
                return r;
            }
    } else {
        // deflation by eta >= sigma_hat is capped at total implosion
        const double eta_eff = std::fmin(eta, sigma_hat);
        for (int m = 1; m <= n; ++m)
            if (scale_trim_minus(a, chi, sigma_hat, eta_eff, m) <= 0.0) {
                r.k = m;
                return r;
            }
    }
    r.k = n;
    r.attained = false;
    return r;
}

// ---------------------------------------------------------------- two-stage

namespace {

// C^L_{m,c}: replace the m smallest order statistics by c (c may be +-inf)
std::vector<double> contaminate_left(const std::vector<double>& sorted, int m, double c) {
    std::vector<double> y = sorted;
    for (int i = 0; i < m; ++i) y[i] = c;
    return y;
}

std::vector<double> contaminate_right(const std::vector<double>& sorted, int m, double c) {
    std::vector<double> y = sorted;
    const int n = int(y.size());
    for (int i = n - m; i < n; ++i) y[i] = c;
    return y;
}

std::vector<double> left_targets(const Sample& sample, const ScoreFamily& score,
                                 const SchemeConfig& scheme, double anchor) {
    std::vector<double> t = {kInf, sample.max()};
    if (scheme.use_a_grid && std::isfinite(anchor)) {
        for (double a : a_grid_offsets(score, scheme.a_levels))
            t.push_back(anchor + a * score.delta());
    }
    return t;
}

std::vector<double> right_targets(const Sample& sample, const ScoreFamily& score,
                                  const SchemeConfig& scheme, double anchor) {
    std::vector<double> t = {-kInf, sample.min()};
    if (scheme.use_a_grid && std::isfinite(anchor)) {
        for (double a : a_grid_offsets(score, scheme.a_levels))
            t.push_back(anchor - a * score.delta());
    }
    return t;
}

}  // namespace

double two_stage_sensitivity_lower(const Sample& sample, const ScoreFamily& score,
                                   const ScaleScoreFamily& chi, int m, Side side,
                                   const SchemeConfig& scheme) {
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(two_stage_sensitivity_lower(sample, score, chi, m, Side::plus, scheme),
                         two_stage_sensitivity_lower(sample, score, chi, m, Side::minus, scheme));
    const double base = solve_two_stage(sample, score, chi).theta_hat;
    double best = 0.0;
    auto consider = [&](const std::vector<double>& contaminated) {
        Sample y(contaminated);
        try {
            FitResult fit = solve_two_stage(y, score, chi,
                                            side == Side::plus ? RootSelect::largest
                                                               : RootSelect::smallest);
            const double disp = side == Side::plus ? fit.theta_hat - base : base - fit.theta_hat;
            if (disp > best) best = disp;
        } catch (const std::domain_error&) {
            // degenerate scale under this contamination: no displacement recorded
        }
    };
    // first pass with the extreme targets, then optionally the A-grid around
    // the best contaminated location found so far
    const std::vector<double> base_targets =
        side == Side::plus ? std::vector<double>{kInf, sample.max()}
                           : std::vector<double>{-kInf, sample.min()};
    for (double c : base_targets)
        consider(side == Side::plus ? contaminate_left(sample.sorted(), m, c)
                                    : contaminate_right(sample.sorted(), m, c));
    if (scheme.use_a_grid && std::isfinite(best)) {
        const double anchor = side == Side::plus ? base + best : base - best;
        for (double a : a_grid_offsets(score, scheme.a_levels)) {
            const double c =
                side == Side::plus ? anchor + a * score.delta() : anchor - a * score.delta();
            consider(side == Side::plus ? contaminate_left(sample.sorted(), m, c)
                                        : contaminate_right(sample.sorted(), m, c));
        }
    }
    return best;
}

// [sigma_lo, sigma_hi] covering the median-centered scale of every
// m-contaminated sample: the contaminated median lives inside its own
// sensitivity envelope (sign score, exact), so each kept centered residual
// moves by at most S in absolute value; padding the |.| order statistics by S
// before applying the scale inflation/deflation conditions keeps the envelope
// valid.
std::pair<double, double> two_stage_scale_envelope(const Sample& sample,
                                                   const ScaleScoreFamily& chi, int m) {
    const int n = int(sample.n());
    const double sigma = two_stage_scale(sample, chi);
    if (m == 0) return {sigma, sigma};
    static const ScoreFamily med_score = ScoreFamily::sign();
    const double med = sample.median();
    const double s_up = location_sensitivity_side(sample, med_score, med, m, Side::plus);
    const double s_dn = location_sensitivity_side(sample, med_score, med, m, Side::minus);
    const double shift = std::fmax(s_up, s_dn);
    if (!std::isfinite(shift)) return {0.0, kInf};

    std::vector<double> a;
    a.reserve(n);
    for (double v : sample.values()) a.push_back(std::fabs(v - med));
    std::sort(a.begin(), a.end());

    // sigma_hi: largest root of sum_{i>m} chi((a_i + S)/sigma) + m chi(inf) = 0
    auto up = [&](double s) {
        double acc = double(m) * chi.chi_pos_inf();
        for (int i = m; i < n; ++i) acc += chi.evaluate((a[i] + shift) / std::exp(s));
        return acc;
    };
    double sigma_hi;
    {
        const double s0 = std::log(sigma);
        double hi = s0 + 1.0;
        int k = 0;
        while (up(hi) >= 0.0 && k++ < tol::max_bracket_doublings) hi = s0 + (hi - s0) * 2.0;
        sigma_hi = (up(hi) >= 0.0) ? kInf : std::exp(shrink_upper_edge(up, s0, hi));
    }
    // sigma_lo: smallest root of sum_{i<=n-m} chi(max(a_i - S, 0)/sigma) + m chi(0) = 0
    auto dn = [&](double s) {
        double acc = double(m) * chi.chi_at_zero();
        for (int i = 0; i < n - m; ++i) {
            const double v = std::fmax(a[i] - shift, 0.0);
            acc += v == 0.0 ? chi.chi_at_zero() : chi.evaluate(v / std::exp(s));
        }
        return acc;
    };
    double sigma_lo;
    {
        const double s0 = std::log(sigma);
        double lo = s0 - 1.0;
        int k = 0;
        while (dn(lo) <= 0.0 && k++ < tol::max_bracket_doublings) lo = s0 - (s0 - lo) * 2.0;
        sigma_lo = (dn(lo) <= 0.0) ? 0.0 : std::exp(shrink_lower_edge(dn, lo, s0));
    }
    return {sigma_lo, sigma_hi};
}

double two_stage_sensitivity_upper(const Sample& sample, const ScoreFamily& score,
                                   const ScaleScoreFamily& chi, int m, Side side) {
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(two_stage_sensitivity_upper(sample, score, chi, m, Side::plus),
                         two_stage_sensitivity_upper(sample, score, chi, m, Side::minus));
    const FitResult two_stage = solve_two_stage(sample, score, chi);
    const double theta = two_stage.theta_hat;
    const auto [sig_lo, sig_hi] = two_stage_scale_envelope(sample, chi, m);
    if (sig_lo <= 0.0) return kInf;  // r_i = inf convention

    auto rescale = [&](bool primed) {
        std::vector<double> r(sample.n());
        for (std::size_t i = 0; i < sample.n(); ++i) {
            const double x = sample.values()[i];
            const bool use_lo = primed ? (x < 0.0) : (x >= 0.0);
            const double s = use_lo ? sig_lo : sig_hi;
            r[i] = std::isinf(s) ? (x == 0.0 ? 0.0 : 0.0 * x) : x / s;
        }
        return Sample(std::move(r));
    };

    if (side == Side::plus) {
        Sample r = rescale(false);
        const double theta_r = solve_location(r, score).theta_hat;
        const double eta_r = location_sensitivity_side(r, score, theta_r, m, Side::plus);
        const double u = theta_r + eta_r;
        if (std::isinf(u)) return kInf;
        const double sel = u <= 0.0 ? sig_lo : sig_hi;
        if (std::isinf(sel) && u != 0.0) return kInf;
        return (u == 0.0 ? 0.0 : sel * u) - theta;
    }
    Sample r = rescale(true);
    const double theta_r = solve_location(r, score).theta_hat;
    const double eta_r = location_sensitivity_side(r, score, theta_r, m, Side::minus);
    const double v = theta_r - eta_r;
    if (std::isinf(v)) return kInf;
    const double sel = v >= 0.0 ? sig_lo : sig_hi;
    if (std::isinf(sel) && v != 0.0) return kInf;
    return theta - (v == 0.0 ? 0.0 : sel * v);
}

std::pair<SensitivityPoint, SensitivityPoint> two_stage_sensitivity_bounds(
    const Sample& sample, const ScoreFamily& score, const ScaleScoreFamily& chi, int m,
    const SchemeConfig& scheme) {
    SensitivityPoint lo, hi;
    lo.m = hi.m = m;
    lo.kind = ValueKind::lower_bound;
    hi.kind = ValueKind::upper_bound;
    lo.eta_plus = two_stage_sensitivity_lower(sample, score, chi, m, Side::plus, scheme);
    lo.eta_minus = two_stage_sensitivity_lower(sample, score, chi, m, Side::minus, scheme);
    hi.eta_plus = two_stage_sensitivity_upper(sample, score, chi, m, Side::plus);
    hi.eta_minus = two_stage_sensitivity_upper(sample, score, chi, m, Side::minus);
    lo.finish();
    hi.finish();
    return {lo, hi};
}

namespace {

// Flip certificate: with the left contamination scheme, the largest two-stage
// root is >= theta + eta iff the scaled score sum at theta + eta is >= 0.
bool two_stage_flip_certified(const Sample& contaminated, const ScoreFamily& score,
                              const ScaleScoreFamily& chi, double threshold, Side side) {
    try {
        const double sigma = two_stage_scale(contaminated, chi);
        if (!std::isfinite(sigma)) return false;
        const double g = score_sum_scaled(contaminated, score, threshold, sigma);
        return side == Side::plus ? g >= 0.0 : g <= 0.0;
    } catch (const std::domain_error&) {
        return false;
    }
}

}  // namespace

std::pair<BreakdownResult, BreakdownResult> two_stage_bp_bounds(
    const Sample& sample, const ScoreFamily& score, const ScaleScoreFamily& chi, double eta,
    Side side, const SchemeConfig& scheme) {
    if (!(eta > 0.0)) throw std::domain_error("two_stage_bp_bounds: eta must be positive");
    if (side == Side::two_sided) {
        auto p = two_stage_bp_bounds(sample, score, chi, eta, Side::plus, scheme);
        auto m = two_stage_bp_bounds(sample, score, chi, eta, Side::minus, scheme);
        BreakdownResult lo = (p.first.k <= m.first.k) ? p.first : m.first;
        BreakdownResult hi = (p.second.k <= m.second.k) ? p.second : m.second;
        lo.side = hi.side = Side::two_sided;
        return {lo, hi};
    }
    const int n = int(sample.n());
    const double base = solve_two_stage(sample, score, chi).theta_hat;
    const double threshold = side == Side::plus ? base + eta : base - eta;

    BreakdownResult lo, hi;
    lo.eta = hi.eta = eta;
    lo.side = hi.side = side;
    lo.n = hi.n = n;
    lo.kind = ValueKind::lower_bound;
    hi.kind = ValueKind::upper_bound;
    lo.attained = hi.attained = false;
    lo.k = hi.k = n;

    for (int m = 1; m <= n; ++m) {
        if (!lo.attained &&
            two_stage_sensitivity_upper(sample, score, chi, m, side) >= eta) {
            lo.k = m;
            lo.attained = true;
        }
        if (!hi.attained) {
            const auto targets = side == Side::plus
                                     ? left_targets(sample, score, scheme, threshold)
                                     : right_targets(sample, score, scheme, threshold);
            for (double c : targets) {
                Sample y(side == Side::plus ? contaminate_left(sample.sorted(), m, c)
                                            : contaminate_right(sample.sorted(), m, c));
                if (two_stage_flip_certified(y, score, chi, threshold, side)) {
                    hi.k = m;
                    hi.attained = true;
                    break;
                }
            }
        }
        if (lo.attained && hi.attained) break;
    }
    if (!lo.attained && hi.attained) lo.k = hi.k;
    return {lo, hi};
}

// ---------------------------------------------------------------- restricted SE

namespace {

struct CenteredScores {
    std::vector<double> psi;   // psi(z_pi), |z| ascending
    std::vector<double> dpsi;  // psi'(z_pi)
};

CenteredScores centered_scores(const Sample& sample, const ScoreFamily& score, double center) {
    std::vector<double> z;
    z.reserve(sample.n());
    for (double x : sample.values()) z.push_back(x - center);
    std::sort(z.begin(), z.end(),
              [](double a, double b) { return std::fabs(a) < std::fabs(b); });
    CenteredScores cs;
    cs.psi.reserve(z.size());
    cs.dpsi.reserve(z.size());
    for (double v : z) {
        if (std::isinf(v)) {
            cs.psi.push_back(v > 0 ? score.psi_pos_inf() : score.psi_neg_inf());
            cs.dpsi.push_back(0.0);
        } else {
            cs.psi.push_back(score.evaluate(v));
            cs.dpsi.push_back(score.derivative(v));
        }
    }
    return cs;
}

}  // namespace

double se_restricted_sensitivity_side(const Sample& sample, const ScoreFamily& score,
                                      double theta0, int m, Side side) {
    const int n = int(sample.n());
    if (m < 0 || m > n) throw std::domain_error("se_restricted_sensitivity: m out of range");
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(se_restricted_sensitivity_side(sample, score, theta0, m, Side::plus),
                         se_restricted_sensitivity_side(sample, score, theta0, m, Side::minus));
    if (!score.bounded()) return side == Side::plus ? kInf : 0.0;
    const CenteredScores cs = centered_scores(sample, score, theta0);
    const double se0 = plugin_se(sample, score, theta0);
    const double pm2 = score.psi_max() * score.psi_max();

    if (side == Side::plus) {
        double num = double(m) * pm2, den = 0.0;
        for (int i = m; i < n; ++i) {
            num += cs.psi[i] * cs.psi[i];
            den += cs.dpsi[i];
        }
        if (!(den > 0.0)) return kInf;
        return std::fmax(std::sqrt(num) / den - se0, 0.0);
    }
    double num = 0.0, den = double(m) * score.deriv_at_zero();
    for (int i = 0; i < n - m; ++i) {
        num += cs.psi[i] * cs.psi[i];
        den += cs.dpsi[i];
    }
    if (!(den > 0.0)) return kInf;
    return std::fmax(se0 - std::sqrt(num) / den, 0.0);
}

SensitivityPoint se_restricted_sensitivity(const Sample& sample, const ScoreFamily& score,
                                           double theta0, int m) {
    SensitivityPoint p;
    p.m = m;
    p.eta_plus = se_restricted_sensitivity_side(sample, score, theta0, m, Side::plus);
    p.eta_minus = se_restricted_sensitivity_side(sample, score, theta0, m, Side::minus);
    p.finish();
    return p;
}

// ---------------------------------------------------------------- plug-in SE bounds

namespace {

struct SePluginContext {
    double theta = 0.0;
    double se = 0.0;
    double eta_plus = 0.0, eta_minus = 0.0, eta_two = 0.0;
    CenteredScores cs;  // sorted by |x - theta|
    int s_plus = 0, s_minus = 0;
    double delta_mod = 0.0;
};

SePluginContext se_plugin_context(const Sample& sample, const ScoreFamily& score) {
    SePluginContext ctx;
    ctx.theta = solve_location(sample, score).theta_hat;
    ctx.se = plugin_se(sample, score, ctx.theta);
    ctx.cs = centered_scores(sample, score, ctx.theta);
    return ctx;
}

void se_plugin_fill_m(SePluginContext& ctx, const Sample& sample, const ScoreFamily& score,
                      int m) {
    const int n = int(sample.n());
    ctx.eta_plus = location_sensitivity_side(sample, score, ctx.theta, m, Side::plus);
    ctx.eta_minus = location_sensitivity_side(sample, score, ctx.theta, m, Side::minus);
    ctx.eta_two = std::fmax(ctx.eta_plus, ctx.eta_minus);
    ctx.delta_mod = ctx.eta_two > 0.0 ? score.deriv_modulus(std::isinf(ctx.eta_two) ? 1e300
                                                                                    : ctx.eta_two)
                                      : 0.0;
    const auto& xs = sample.sorted();
    int s1 = 0, s2 = 0;
    for (int i = 0; i < n - m; ++i)
        if (ctx.theta + ctx.eta_plus >= 2.0 * xs[i] - ctx.theta) ++s1;
    for (int i = m; i < n; ++i)
        if (ctx.theta - ctx.eta_minus <= 2.0 * xs[i] - ctx.theta) ++s2;
    ctx.s_plus = std::max(s1, s2);
    int above = 0, below = 0;
    for (double x : xs) {
        if (x >= ctx.theta) ++above;
        if (x <= ctx.theta) ++below;
    }
    ctx.s_minus = std::max(std::max(above, below) - m, 0);
}

// Huber band-count change q_{m+-} = min/max over admissible shifts of
// #{|x_i - t| <= delta} - #{|x_i - theta| <= delta}.
std::pair<int, int> huber_band_count_change(const Sample& sample, const ScoreFamily& score,
                                            const SePluginContext& ctx) {
    const double delta = score.delta();
    const auto& xs = sample.sorted();
    auto count_in_band = [&](double t) {
        int c = 0;
        for (double x : xs)
            if (std::isfinite(x) && std::fabs(x - t) <= delta) ++c;
        return c;
    };
    const int base = count_in_band(ctx.theta);
    double lo = ctx.theta - ctx.eta_minus;
    double hi = ctx.theta + ctx.eta_plus;
    // clamp infinite envelopes to a range past every breakpoint
    const double far = std::fabs(ctx.theta) + std::fabs(sample.min()) + std::fabs(sample.max()) +
                       2.0 * delta + 1.0;
    if (!std::isfinite(lo)) lo = -far;
    if (!std::isfinite(hi)) hi = far;
    std::set<double> cand = {lo, hi};
    for (double x : xs) {
        if (!std::isfinite(x)) continue;
        for (double b : {x - delta, x + delta})
            if (b > lo && b < hi) cand.insert(b);
    }
    // midpoints between consecutive breakpoints pick up the open plateaus
    std::vector<double> pts(cand.begin(), cand.end());
    std::vector<double> eval = pts;
    for (std::size_t i = 1; i < pts.size(); ++i) eval.push_back(0.5 * (pts[i - 1] + pts[i]));
    int qmin = 0, qmax = 0;
    for (double t : eval) {
        const int d = count_in_band(t) - base;
        qmin = std::min(qmin, d);
        qmax = std::max(qmax, d);
    }
    return {qmin, qmax};
}

// sup/inf over t in [lo,hi] of the top/bottom-(n-m) sums of h_i(t) = psi(x_i-theta-t)^2.
// For Huber the pieces are convex quadratics: breakpoint enumeration is exact.
// For smooth families: padded grid search (padding keeps the bound direction safe).
struct EnvelopeNums {
    double upper;  // N-bar minus the m*psi_max^2 part
    double lower;  // N-underbar
};

EnvelopeNums envelope_numerators(const Sample& sample, const ScoreFamily& score,
                                 const SePluginContext& ctx, int m) {
    const int n = int(sample.n());
    const double pm2 = score.psi_max() * score.psi_max();
    double lo = -ctx.eta_minus, hi = ctx.eta_plus;
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        return {double(n - m) * pm2, 0.0};
    }
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) c[i] = sample.sorted()[i] - ctx.theta;

    auto top_sum = [&](double t) {
        std::vector<double> h(n);
        for (int i = 0; i < n; ++i) {
            const double p = score.evaluate(c[i] - t);
            h[i] = p * p;
        }
        std::sort(h.begin(), h.end());
        double top = 0.0, bot = 0.0;
        for (int i = m; i < n; ++i) top += h[i];
        for (int i = 0; i < n - m; ++i) bot += h[i];
        return std::pair<double, double>{top, bot};
    };

    double best_top = -kInf, best_bot = kInf;
    auto visit = [&](double t) {
        auto [top, bot] = top_sum(t);
        best_top = std::fmax(best_top, top);
        best_bot = std::fmin(best_bot, bot);
    };

    if (score.kind() == ScoreKind::huber) {
        const double delta = score.delta();
        std::set<double> cand = {lo, hi};
        for (int i = 0; i < n; ++i) {
            for (double b : {c[i] - delta, c[i] + delta})
                if (b > lo && b < hi) cand.insert(b);
            for (int j = i + 1; j < n; ++j) {
                const double mid = 0.5 * (c[i] + c[j]);
                if (mid > lo && mid < hi) cand.insert(mid);
            }
        }
        std::vector<double> pts(cand.begin(), cand.end());
        for (double t : pts) visit(t);
        // per-piece interior minimum of the (convex) bottom sum
        for (std::size_t k = 1; k < pts.size(); ++k) {
            const double t1 = pts[k - 1], t2 = pts[k];
            const double tm = 0.5 * (t1 + t2);
            // active bottom set at the midpoint; unsaturated members are quadratics
            std::vector<std::pair<double, int>> h(n);
            for (int i = 0; i < n; ++i) {
                const double p = score.evaluate(c[i] - tm);
                h[i] = {p * p, i};
            }
            std::sort(h.begin(), h.end());
            double sum_c = 0.0;
            int cnt = 0;
            for (int i = 0; i < n - m; ++i) {
                const int idx = h[i].second;
                if (std::fabs(c[idx] - tm) < delta) {
                    sum_c += c[idx];
                    ++cnt;
                }
            }
            if (cnt > 0) {
                const double tstar = sum_c / double(cnt);
                if (tstar > t1 && tstar < t2) visit(tstar);
            }
            visit(tm);
        }
    } else {
        const int grid = 2048;
        const double len = hi - lo;
        const double step = len / grid;
        for (int k = 0; k <= grid; ++k) visit(lo + step * k);
        // |d/dt top-sum| <= (n-m) * 2 * psi_max * psi'(0)
        const double pad =
            0.5 * step * double(n - m) * 2.0 * score.psi_max() * score.deriv_at_zero();
        best_top += pad;
        best_bot -= pad;
    }
    return {best_top, std::fmax(best_bot, 0.0)};
}

}  // namespace

double se_plugin_sensitivity_upper_side(const Sample& sample, const ScoreFamily& score, int m,
                                        Side side, bool envelope) {
    const int n = int(sample.n());
    if (m < 0 || m > n) throw std::domain_error("se_plugin_sensitivity: m out of range");
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(se_plugin_sensitivity_upper_side(sample, score, m, Side::plus, envelope),
                         se_plugin_sensitivity_upper_side(sample, score, m, Side::minus, envelope));
    if (!score.bounded()) return side == Side::plus ? kInf : 0.0;

    SePluginContext ctx = se_plugin_context(sample, score);
    se_plugin_fill_m(ctx, sample, score, m);
    const double pm2 = score.psi_max() * score.psi_max();
    const double dp0 = score.deriv_at_zero();

    const bool huber = score.kind() == ScoreKind::huber;
    int q_lo = 0, q_hi = 0;
    if (huber) std::tie(q_lo, q_hi) = huber_band_count_change(sample, score, ctx);

    if (side == Side::plus) {
        double num = 5.0 * double(m) * pm2;
        double den_base = 0.0;
        for (int i = m; i < n; ++i) {
            num += ctx.cs.psi[i] * ctx.cs.psi[i];
            den_base += ctx.cs.dpsi[i];
        }
        double den = den_base - double(ctx.s_plus) * ctx.delta_mod;
        if (huber) den = std::fmax(den, den_base + dp0 * double(q_lo - m));
        den = std::fmax(den, 0.0);
        double bound = den > 0.0 ? std::fmax(std::sqrt(num) / den - ctx.se, 0.0) : kInf;
        if (envelope) {
            const EnvelopeNums env = envelope_numerators(sample, score, ctx, m);
            const double env_num = double(m) * pm2 + env.upper;
            const double env_bound =
                den > 0.0 ? std::fmax(std::sqrt(env_num) / den - ctx.se, 0.0) : kInf;
            bound = std::fmin(bound, env_bound);
        }
        return bound;
    }

    double num = -4.0 * double(m) * pm2;
    double den_base = double(m) * dp0;
    for (int i = 0; i < n - m; ++i) {
        num += ctx.cs.psi[i] * ctx.cs.psi[i];
        den_base += ctx.cs.dpsi[i];
    }
    num = std::fmax(num, 0.0);
    double den = den_base + double(ctx.s_minus) * ctx.delta_mod;
    if (huber) den = std::fmin(den, den_base + dp0 * double(q_hi + m));
    double bound = den > 0.0 ? std::fmax(ctx.se - std::sqrt(num) / den, 0.0)
                             : std::fmax(ctx.se, 0.0);
    if (envelope) {
        const EnvelopeNums env = envelope_numerators(sample, score, ctx, m);
        const double env_bound =
            den > 0.0 ? std::fmax(ctx.se - std::sqrt(env.lower) / den, 0.0) : ctx.se;
        bound = std::fmin(bound, env_bound);
    }
    return bound;
}

SensitivityPoint se_plugin_sensitivity_upper(const Sample& sample, const ScoreFamily& score,
                                             int m, bool envelope) {
    SensitivityPoint p;
    p.m = m;
    p.kind = ValueKind::upper_bound;
    p.eta_plus = se_plugin_sensitivity_upper_side(sample, score, m, Side::plus, envelope);
    p.eta_minus = se_plugin_sensitivity_upper_side(sample, score, m, Side::minus, envelope);
    p.finish();
    return p;
}

double se_plugin_sensitivity_lower_side(const Sample& sample, const ScoreFamily& score, int m,
                                        Side side, const SchemeConfig& scheme) {
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(se_plugin_sensitivity_lower_side(sample, score, m, Side::plus, scheme),
                         se_plugin_sensitivity_lower_side(sample, score, m, Side::minus, scheme));
    const double theta = solve_location(sample, score).theta_hat;
    const double se0 = plugin_se(sample, score, theta);
    const double eta_p = location_sensitivity_side(sample, score, theta, m, Side::plus);
    const double eta_m = location_sensitivity_side(sample, score, theta, m, Side::minus);

    double best = 0.0;
    auto consider = [&](const std::vector<double>& y) {
        Sample s(y);
        try {
            const double t = solve_location(s, score).theta_hat;
            if (!std::isfinite(t)) return;
            const double se = plugin_se(s, score, t);
            const double disp = side == Side::plus ? se - se0 : se0 - se;
            if (disp > best) best = disp;
        } catch (const std::domain_error&) {
        }
    };

    // SE inflation: extremes and the A-grid anchored at the shifted location.
    // SE deflation: move points onto the center (psi contribution -> 0).
    std::vector<double> targets;
    if (side == Side::plus) {
        targets = {kInf, -kInf};
        for (double a : a_grid_offsets(score, scheme.a_levels)) {
            if (std::isfinite(eta_p)) targets.push_back(theta + eta_p + a * score.delta());
            if (std::isfinite(eta_m)) targets.push_back(theta - eta_m - a * score.delta());
        }
    } else {
        targets = {theta, sample.median()};
    }
    // replace the m smallest, the m largest, or the m closest to theta
    std::vector<double> by_closeness = sample.values();
    std::sort(by_closeness.begin(), by_closeness.end(), [&](double a, double b) {
        return std::fabs(a - theta) < std::fabs(b - theta);
    });
    for (double c : targets) {
        consider(contaminate_left(sample.sorted(), m, c));
        consider(contaminate_right(sample.sorted(), m, c));
        std::vector<double> y = by_closeness;
        for (int i = 0; i < m; ++i) y[i] = c;
        consider(y);
        std::vector<double> z = by_closeness;
        for (int i = 0; i < m; ++i) z[int(z.size()) - 1 - i] = c;
        consider(z);
    }
    return best;
}

// ---------------------------------------------------------------- weighted

namespace {

// smallest 0-based index k with cum[k] >= p  (W_{k-1} < p <= W_k in 1-based math)
int boundary_index_plus(const std::vector<double>& cum, double p) {
    for (int k = 0; k < int(cum.size()); ++k)
        if (cum[k] >= p) return k;
    return int(cum.size()) - 1;
}

// smallest 0-based index k with cum[k] > p  (W_{k-1} <= p < W_k)
int boundary_index_minus(const std::vector<double>& cum, double p) {
    for (int k = 0; k < int(cum.size()); ++k)
        if (cum[k] > p) return k;
    return int(cum.size()) - 1;
}

double weighted_trim_plus(const WeightedSample& ws, const ScoreFamily& score, double theta,
                          double eta, double mn, int im) {
    const auto& x = ws.sorted_values();
    const auto& w = ws.weights();
    const auto& W = ws.cum_weights();
    double s = mn * score.psi_pos_inf();
    const double part = W[im] - mn;  // mass of the boundary point that stays
    auto term = [&](double xi) {
        return std::isinf(xi) ? (xi > 0 ? score.psi_pos_inf() : score.psi_neg_inf())
                              : score.evaluate(xi - theta - eta);
    };
    s += part * term(x[im]);
    for (int i = im + 1; i < int(x.size()); ++i) s += w[i] * term(x[i]);
    return s;
}

double weighted_trim_minus(const WeightedSample& ws, const ScoreFamily& score, double theta,
                           double eta, double mn, int im) {
    const auto& x = ws.sorted_values();
    const auto& w = ws.weights();
    const auto& W = ws.cum_weights();
    double s = mn * score.psi_neg_inf();
    const double Wprev = im > 0 ? W[im - 1] : 0.0;
    const double part = (1.0 - mn) - Wprev;
    auto term = [&](double xi) {
        return std::isinf(xi) ? (xi > 0 ? score.psi_pos_inf() : score.psi_neg_inf())
                              : score.evaluate(xi - theta + eta);
    };
    for (int i = 0; i < im; ++i) s += w[i] * term(x[i]);
    s += part * term(x[im]);
    return s;
}

}  // namespace

double weighted_location_sensitivity_side(const WeightedSample& ws, const ScoreFamily& score,
                                          double theta_hat_b, int m, Side side) {
    const int n = int(ws.n());
    if (m < 0 || m > n) throw std::domain_error("weighted_location_sensitivity: m out of range");
    if (m == 0) return 0.0;
    if (side == Side::two_sided)
        return std::fmax(
            weighted_location_sensitivity_side(ws, score, theta_hat_b, m, Side::plus),
            weighted_location_sensitivity_side(ws, score, theta_hat_b, m, Side::minus));
    const double mn = double(m) / double(n);
    double spread = 1.0;
    {
        double flo = 0, fhi = 0;
        bool any = false;
        for (double v : ws.sorted_values())
            if (std::isfinite(v)) {
                if (!any) flo = fhi = v, any = true;
                else fhi = v;
            }
        if (any) spread = std::fmax(1.0, fhi - flo) + 1.0;
    }
    if (side == Side::plus) {
        if (std::isinf(score.psi_pos_inf())) return kInf;
        const int im = boundary_index_plus(ws.cum_weights(), mn);
        if ((1.0 - mn) * score.psi_neg_inf() + mn * score.psi_pos_inf() >= 0.0) return kInf;
        auto f = [&](double eta) {
            return weighted_trim_plus(ws, score, theta_hat_b, eta, mn, im);
        };
        return largest_nonneg_root(f, spread);
    }
    if (std::isinf(score.psi_neg_inf())) return kInf;
    const int im = boundary_index_minus(ws.cum_weights(), 1.0 - mn);
    if ((1.0 - mn) * score.psi_pos_inf() + mn * score.psi_neg_inf() <= 0.0) return kInf;
    auto f = [&](double eta) {
        return -weighted_trim_minus(ws, score, theta_hat_b, eta, mn, im);
    };
    return largest_nonneg_root(f, spread);
}

BreakdownResult weighted_location_bp(const WeightedSample& ws, const ScoreFamily& score,
                                     double theta_hat_b, double eta, Side side) {
    if (!(eta > 0.0)) throw std::domain_error("weighted_location_bp: eta must be positive");
    const int n = int(ws.n());
    BreakdownResult r;
    r.eta = eta;
    r.side = side;
    r.n = n;
    if (side == Side::two_sided) {
        BreakdownResult a = weighted_location_bp(ws, score, theta_hat_b, eta, Side::plus);
        BreakdownResult b = weighted_location_bp(ws, score, theta_hat_b, eta, Side::minus);
        r = (!b.attained || (a.attained && a.k <= b.k)) ? a : b;
        r.side = Side::two_sided;
        return r;
    }
    const int cap = (n + 1) / 2;  // the weighted BP grid is {1/n, ..., ceil(n/2)/n}
    for (int m = 1; m <= cap; ++m) {
        const double mn = double(m) / double(n);
        bool hit;
        if (side == Side::plus) {
            if (std::isinf(score.psi_pos_inf())) {
                hit = true;
            } else {
                const int im = boundary_index_plus(ws.cum_weights(), mn);
                hit = weighted_trim_plus(ws, score, theta_hat_b, eta, mn, im) >= 0.0;
            }
        } else {
            if (std::isinf(score.psi_neg_inf())) {
                hit = true;
            } else {
                const int im = boundary_index_minus(ws.cum_weights(), 1.0 - mn);
                hit = weighted_trim_minus(ws, score, theta_hat_b, eta, mn, im) <= 0.0;
            }
        }
        if (hit) {
            r.k = m;
            return r;
        }
    }
    r.k = cap;
    r.attained = false;
    return r;
}

// ---------------------------------------------------------------- curves

std::vector<CurveEntry> sensitivity_curve(const Sample& sample, const ScoreFamily& score,
                                          const std::optional<ScaleScoreFamily>& chi,
                                          const EstimatorSpec& spec,
                                          const std::vector<int>& m_grid,
                                          const SchemeConfig& scheme) {
    std::vector<CurveEntry> out;
    out.reserve(m_grid.size());
    using Kind = EstimatorSpec::Kind;

    double theta = 0.0, sigma = 0.0;
    if (spec.kind == Kind::location)
        theta = solve_location(sample, score).theta_hat;
    else if (spec.kind == Kind::scale) {
        if (!chi) throw std::invalid_argument("sensitivity_curve: scale needs a chi family");
        sigma = *solve_scale(sample, *chi).sigma_hat;
    }

    for (int m : m_grid) {
        CurveEntry e;
        switch (spec.kind) {
            case Kind::location:
                e.lower = e.upper = location_sensitivity(sample, score, theta, m);
                break;
            case Kind::scale:
                e.lower = e.upper = scale_sensitivity(sample, *chi, sigma, m);
                break;
            case Kind::two_stage: {
                if (!chi) throw std::invalid_argument("sensitivity_curve: two_stage needs chi");
                auto [lo, hi] = two_stage_sensitivity_bounds(sample, score, *chi, m, scheme);
                e.lower = lo;
                e.upper = hi;
                e.exact = false;
                break;
            }
            case Kind::se_restricted:
                e.lower = e.upper = se_restricted_sensitivity(sample, score, spec.theta0, m);
                break;
            case Kind::se_plugin: {
                e.upper = se_plugin_sensitivity_upper(sample, score, m);
                e.lower.m = m;
                e.lower.kind = ValueKind::lower_bound;
                e.lower.eta_plus =
                    se_plugin_sensitivity_lower_side(sample, score, m, Side::plus, scheme);
                e.lower.eta_minus =
                    se_plugin_sensitivity_lower_side(sample, score, m, Side::minus, scheme);
                e.lower.finish();
                e.exact = false;
                break;
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace robustbp
