#include "robustbp/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "robustbp/quadrature.hpp"
#include "robustbp/roots.hpp"
#include "robustbp/tolerances.hpp"

namespace robustbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double psi_safe(const ScoreFamily& score, double arg) { return score.evaluate(arg); }

void require_bounded(const ScoreFamily& score, const char* who) {
    if (!score.bounded())
        throw std::domain_error(std::string(who) + ": needs a bounded score family");
}

}  // namespace

double population_location(const PopulationModel& model, const ScoreFamily& score) {
    auto g = [&](double theta) {
        return expect(model, [&](double x) { return psi_safe(score, x - theta); },
                      score.nonsmooth_points(theta));
    };
    // expected score is nonincreasing in theta
    double lo = model.quantile(0.3), hi = model.quantile(0.7);
    if (!std::isfinite(lo)) lo = -1.0;
    if (!std::isfinite(hi)) hi = 1.0;
    double r = std::fmax(1.0, hi - lo);
    double center = 0.5 * (lo + hi);
    double a = center - r, b = center + r;
    int k = 0;
    while (g(a) < 0.0 && k++ < tol::max_bracket_doublings) a = center - (r *= 2.0);
    k = 0;
    while (g(b) > 0.0 && k++ < tol::max_bracket_doublings) b = center + (r *= 2.0);
    if (g(a) < 0.0 || g(b) > 0.0)
        throw std::runtime_error("population_location: no bracket");
    while (b - a > tol::population_root) {
        const double mid = 0.5 * (a + b);
        (g(mid) >= 0.0 ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

double population_h(const PopulationModel& model, const ScoreFamily& score, double eps,
                    double eta, Side side) {
    require_bounded(score, "population_h");
    const double B = score.psi_max();
    const double theta0 = population_location(model, score);
    if (side == Side::plus)
        return expect_range(model, [&](double x) { return psi_safe(score, x - theta0 - eta); },
                            eps, 1.0, score.nonsmooth_points(theta0 + eta)) +
               eps * B;
    return expect_range(model, [&](double x) { return psi_safe(score, x - theta0 + eta); }, 0.0,
                        1.0 - eps, score.nonsmooth_points(theta0 - eta)) -
           eps * B;
}

namespace {

double population_sensitivity_at(const PopulationModel& model, const ScoreFamily& score,
                                 double theta0, double eps, Side side) {
    const double B = score.psi_max();
    if (side == Side::plus) {
        auto h = [&](double eta) {
            return expect_range(model,
                                [&](double x) { return psi_safe(score, x - theta0 - eta); },
                                eps, 1.0, score.nonsmooth_points(theta0 + eta)) +
                   eps * B;
        };
        double hi = 1.0;
        int k = 0;
        while (h(hi) >= 0.0 && k++ < tol::max_bracket_doublings) hi *= 2.0;
        if (h(hi) >= 0.0) throw std::runtime_error("population_sensitivity: diverged");
        return shrink_upper_edge(h, 0.0, hi);
    }
    auto h = [&](double eta) {
        return -(expect_range(model,
                              [&](double x) { return psi_safe(score, x - theta0 + eta); }, 0.0,
                              1.0 - eps, score.nonsmooth_points(theta0 - eta)) -
                 eps * B);
    };
    double hi = 1.0;
    int k = 0;
    while (h(hi) >= 0.0 && k++ < tol::max_bracket_doublings) hi *= 2.0;
    if (h(hi) >= 0.0) throw std::runtime_error("population_sensitivity: diverged");
    return shrink_upper_edge(h, 0.0, hi);
}

}  // namespace

double population_sensitivity(const PopulationModel& model, const ScoreFamily& score, double eps,
                              Side side) {
    require_bounded(score, "population_sensitivity");
    if (!(eps > 0.0 && eps < 0.5))
        throw std::domain_error("population_sensitivity: eps must lie in (0, 0.5)");
    const double theta0 = population_location(model, score);
    return population_sensitivity_at(model, score, theta0, eps, side);
}

namespace {

struct OdeRhs {
    const PopulationModel& model;
    const ScoreFamily& score;
    double theta0;
    double B;

    double plus(double eps, double eta) const {
        const double q = model.quantile(eps);
        const double num = -psi_safe(score, q - theta0 - eta) + B;
        const double den = expect_range(
            model, [&](double x) { return score.derivative(x - theta0 - eta); }, eps, 1.0,
            score.nonsmooth_points(theta0 + eta));
        if (den < 1e-12)
            throw std::runtime_error("maxbias_curve: tail information vanished (singularity)");
        return num / den;
    }
    double minus(double eps, double eta) const {
        const double q = model.quantile(1.0 - eps);
        const double num = psi_safe(score, q - theta0 + eta) + B;
        const double den = expect_range(
            model, [&](double x) { return score.derivative(x - theta0 + eta); }, 0.0, 1.0 - eps,
            score.nonsmooth_points(theta0 - eta));
        if (den < 1e-12)
            throw std::runtime_error("maxbias_curve: tail information vanished (singularity)");
        return num / den;
    }
};

}  // namespace

MaxbiasCurve maxbias_curve(const PopulationModel& model, const ScoreFamily& score,
                           double eps_max, double step) {
    require_bounded(score, "maxbias_curve");
    if (!(eps_max > 0.0 && eps_max <= 0.499))
        throw std::domain_error("maxbias_curve: eps_max must lie in (0, 0.499]");
    if (!(step > 0.0)) throw std::domain_error("maxbias_curve: step must be positive");

    OdeRhs rhs{model, score, population_location(model, score), score.psi_max()};
    MaxbiasCurve curve;
    double eps = 0.0, etap = 0.0, etam = 0.0;
    curve.eps.push_back(eps);
    curve.eta_plus.push_back(etap);
    curve.eta_minus.push_back(etam);
    curve.deta_plus.push_back(rhs.plus(0.0, 0.0));
    curve.deta_minus.push_back(rhs.minus(0.0, 0.0));

    while (eps < eps_max - 1e-15) {
        const double h = std::fmin(step, eps_max - eps);
        const double k1p = rhs.plus(eps, etap);
        const double k1m = rhs.minus(eps, etam);
        const double k2p = rhs.plus(eps + 0.5 * h, etap + 0.5 * h * k1p);
        const double k2m = rhs.minus(eps + 0.5 * h, etam + 0.5 * h * k1m);
        const double k3p = rhs.plus(eps + 0.5 * h, etap + 0.5 * h * k2p);
        const double k3m = rhs.minus(eps + 0.5 * h, etam + 0.5 * h * k2m);
        const double k4p = rhs.plus(eps + h, etap + h * k3p);
        const double k4m = rhs.minus(eps + h, etam + h * k3m);
        etap += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        etam += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        eps += h;
        curve.eps.push_back(eps);
        curve.eta_plus.push_back(etap);
        curve.eta_minus.push_back(etam);
        curve.deta_plus.push_back(rhs.plus(eps, etap));
        curve.deta_minus.push_back(rhs.minus(eps, etam));
    }
    return curve;
}

double population_bp(const PopulationModel& model, const ScoreFamily& score, double eta,
                     Side side) {
    require_bounded(score, "population_bp");
    if (!(eta > 0.0)) throw std::domain_error("population_bp: eta must be positive");
    const double theta0 = population_location(model, score);
    auto eta_of = [&](double eps) {
        return population_sensitivity_at(model, score, theta0, eps, side);
    };
    double lo = 1e-6, hi = 0.499;
    if (eta_of(hi) < eta) throw std::domain_error("population_bp: eta beyond the curve range");
    if (eta_of(lo) > eta) throw std::domain_error("population_bp: eta below the curve range");
    for (int it = 0; it < tol::max_bisect_iter && hi - lo > 1e-8; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eta_of(mid) < eta ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

struct VarTerms {
    double a;    // E psi'(X - theta0)
    double b;    // tail E psi'(X - theta0 -+ eta)
    double p;    // psi(q - (theta0 +- eta))
    double d;    // f(q)
    double m11;  // E psi(X - theta0)^2
    double m12;  // E psi(X-theta0) psi(X - theta0 -+ eta) I{tail}
    double m13;  // E psi(X-theta0) (I{X <= q} - eps-ish)
    double m22;  // E psi(X - theta0 -+ eta)^2 I{tail} - eps^2 B^2
    double m23;  // eps^2 B
    double m33;  // eps (1 - eps)
    double eps;
    double B;
};

VarTerms variance_terms(const PopulationModel& model, const ScoreFamily& score, double eps,
                        Side side, double theta0, double eta) {
    VarTerms t{};
    t.eps = eps;
    t.B = score.psi_max();
    const bool plus = side == Side::plus;
    const double u_cut = plus ? eps : 1.0 - eps;
    const double q = model.quantile(u_cut);
    const double shift = plus ? theta0 + eta : theta0 - eta;

    const auto cuts0 = score.nonsmooth_points(theta0);
    const auto cuts1 = score.nonsmooth_points(shift);
    auto cuts01 = cuts0;
    cuts01.insert(cuts01.end(), cuts1.begin(), cuts1.end());
    t.a = expect(model, [&](double x) { return score.derivative(x - theta0); }, cuts0);
    if (plus)
        t.b = expect_range(model, [&](double x) { return score.derivative(x - shift); }, eps, 1.0,
                           cuts1);
    else
        t.b = expect_range(model, [&](double x) { return score.derivative(x - shift); }, 0.0,
                           1.0 - eps, cuts1);
    t.p = psi_safe(score, q - shift);
    t.d = model.pdf(q);
    t.m11 = expect(model,
                   [&](double x) {
                       const double v = psi_safe(score, x - theta0);
                       return v * v;
                   },
                   cuts0);
    auto tail12 = [&](double x) {
        return psi_safe(score, x - theta0) * psi_safe(score, x - shift);
    };
    auto tail22 = [&](double x) {
        const double v = psi_safe(score, x - shift);
        return v * v;
    };
    if (plus) {
        t.m12 = expect_range(model, tail12, eps, 1.0, cuts01);
        t.m22 = expect_range(model, tail22, eps, 1.0, cuts1) - eps * eps * t.B * t.B;
        // E psi(X - theta0)(I{X <= q_eps} - eps)
        t.m13 = expect_range(model, [&](double x) { return psi_safe(score, x - theta0); }, 0.0,
                             eps, cuts0) -
                eps * expect(model, [&](double x) { return psi_safe(score, x - theta0); }, cuts0);
    } else {
        t.m12 = expect_range(model, tail12, 0.0, 1.0 - eps, cuts01);
        t.m22 = expect_range(model, tail22, 0.0, 1.0 - eps, cuts1) - eps * eps * t.B * t.B;
        t.m13 = expect_range(model, [&](double x) { return psi_safe(score, x - theta0); }, 0.0,
                             1.0 - eps, cuts0) -
                (1.0 - eps) *
                    expect(model, [&](double x) { return psi_safe(score, x - theta0); }, cuts0);
    }
    t.m23 = eps * eps * t.B;
    t.m33 = eps * (1.0 - eps);
    return t;
}

// 3x3 linear solve (Gaussian elimination, partial pivoting)
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> A, std::array<double, 3> rhs) {
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(rhs[c], rhs[piv]);
        if (std::fabs(A[c][c]) < 1e-14) throw std::runtime_error("singular derivative matrix");
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = A[r][c] / A[c][c];
            for (int k = c; k < 3; ++k) A[r][k] -= f * A[c][k];
            rhs[r] -= f * rhs[c];
        }
    }
    return {rhs[0] / A[0][0], rhs[1] / A[1][1], rhs[2] / A[2][2]};
}

double variance_sandwich(const VarTerms& t, Side side) {
    // derivative matrix of E Psi at the root, rows = equations, cols = (theta, eta, q)
    std::array<std::array<double, 3>, 3> V;
    if (side == Side::plus)
        V = {{{-t.a, 0.0, 0.0}, {-t.b, -t.b, -t.p * t.d}, {0.0, 0.0, t.d}}};
    else
        V = {{{-t.a, 0.0, 0.0}, {-t.b, t.b, t.p * t.d}, {0.0, 0.0, t.d}}};
    const std::array<std::array<double, 3>, 3> S = {{{t.m11, t.m12, t.m13},
                                                     {t.m12, t.m22, t.m23},
                                                     {t.m13, t.m23, t.m33}}};
    // row 2 of V^{-1}: solve V^T r = e2
    std::array<std::array<double, 3>, 3> VT;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) VT[i][j] = V[j][i];
    const std::array<double, 3> r = solve3(VT, {0.0, 1.0, 0.0});
    double out = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out += r[i] * S[i][j] * r[j];
    return out;
}

// Expanded six-term scalar form. The plus side flips the sign of the two
// cross terms relative to the minus side: row 2 of the inverse derivative
// matrix is (1/a, -1/b, -c/(bd)) on the plus side and (-1/a, 1/b, -c/(bd))
// on the minus side, which a Monte Carlo study of sqrt(n)(eta_hat - eta)
// confirms.
double variance_expanded(const VarTerms& t, Side side) {
    const double cross = side == Side::plus ? -1.0 : 1.0;
    double v = t.m11 / (t.a * t.a);
    v += t.m22 / (t.b * t.b);
    v += t.eps * (1.0 - t.eps) * t.p * t.p / (t.b * t.b);
    v -= 2.0 * t.m12 / (t.a * t.b);
    v += cross * 2.0 * t.p * t.m13 / (t.a * t.b);
    v -= cross * 2.0 * t.p * t.eps * t.eps * t.B / (t.b * t.b);
    return v;
}

}  // namespace

double asymptotic_variance_sensitivity(const PopulationModel& model, const ScoreFamily& score,
                                       double eps, Side side) {
    require_bounded(score, "asymptotic_variance_sensitivity");
    if (side == Side::two_sided)
        throw std::domain_error("asymptotic_variance_sensitivity: pick a side");
    const double theta0 = population_location(model, score);
    const double eta = population_sensitivity_at(model, score, theta0, eps, side);
    const VarTerms t = variance_terms(model, score, eps, side, theta0, eta);
    if (!(t.a > 0.0) || !(t.b > 0.0) || !(t.d > 0.0))
        throw std::runtime_error("asymptotic_variance_sensitivity: regularity violated");
    const double v1 = variance_sandwich(t, side);
    const double v2 = variance_expanded(t, side);
    if (std::fabs(v1 - v2) > 1e-10 * std::fmax(1.0, std::fabs(v1)))
        throw std::runtime_error("asymptotic_variance_sensitivity: route mismatch (" +
                                 std::to_string(v1) + " vs " + std::to_string(v2) + ")");
    if (!(v2 > 0.0)) throw std::runtime_error("asymptotic_variance_sensitivity: nonpositive");
    return v2;
}

double maxbias_slope(const PopulationModel& model, const ScoreFamily& score, double eps,
                     Side side) {
    require_bounded(score, "maxbias_slope");
    const double theta0 = population_location(model, score);
    const double eta = population_sensitivity_at(model, score, theta0, eps, side);
    OdeRhs rhs{model, score, theta0, score.psi_max()};
    return side == Side::plus ? rhs.plus(eps, eta) : rhs.minus(eps, eta);
}

double asymptotic_variance_bp(const PopulationModel& model, const ScoreFamily& score,
                              double eps_star, Side side) {
    require_bounded(score, "asymptotic_variance_bp");
    const double theta0 = population_location(model, score);
    const double eta = population_sensitivity_at(model, score, theta0, eps_star, side);
    const double B = score.psi_max();
    const double V = asymptotic_variance_sensitivity(model, score, eps_star, side);

    double b, e;
    if (side == Side::plus) {
        b = expect_range(model, [&](double x) { return score.derivative(x - theta0 - eta); },
                         eps_star, 1.0, score.nonsmooth_points(theta0 + eta));
        e = B - psi_safe(score, model.quantile(eps_star) - theta0 - eta);
    } else {
        b = expect_range(model, [&](double x) { return score.derivative(x - theta0 + eta); },
                         0.0, 1.0 - eps_star, score.nonsmooth_points(theta0 - eta));
        e = psi_safe(score, model.quantile(1.0 - eps_star) - theta0 + eta) + B;
    }
    if (!(e > 0.0)) throw std::runtime_error("asymptotic_variance_bp: flat tail (e <= 0)");
    const double slope = b / e;  // d eps / d eta
    return slope * slope * V;
}

namespace {

std::array<double, 3> zsystem_eval(const std::vector<double>& xs, const std::vector<double>& ws,
                                   const ZState& st, Side side, const ScoreFamily& score) {
    const double B = score.psi_max();
    if (!std::isfinite(B)) throw std::domain_error("zsystem_residual: bounded score required");
    double r1 = 0, r2 = 0, r3 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double w = ws.empty() ? 1.0 / double(xs.size()) : ws[i];
        const double p0 = std::isinf(x) ? (x > 0 ? score.psi_pos_inf() : score.psi_neg_inf())
                                        : score.evaluate(x - st.theta);
        r1 += w * p0;
        if (side == Side::plus) {
            if (x > st.q)
                r2 += w * (std::isinf(x) ? score.psi_pos_inf()
                                         : score.evaluate(x - st.theta - st.eta));
            r3 += w * (x <= st.q ? 1.0 : 0.0);
        } else {
            if (x < st.q)
                r2 += w * (std::isinf(x) ? score.psi_neg_inf()
                                         : score.evaluate(x - st.theta + st.eta));
            r3 += w * (x <= st.q ? 1.0 : 0.0);
        }
    }
    if (side == Side::plus) {
        r2 += st.eps * B;
        r3 -= st.eps;
    } else {
        r2 -= st.eps * B;
        r3 -= (1.0 - st.eps);
    }
    return {r1, r2, r3};
}

}  // namespace

std::array<double, 3> zsystem_residual(const Sample& sample, const ZState& state, Side side,
                                       const ScoreFamily& score) {
    return zsystem_eval(sample.values(), {}, state, side, score);
}

std::array<double, 3> zsystem_residual(const WeightedSample& ws, const ZState& state, Side side,
                                       const ScoreFamily& score) {
    return zsystem_eval(ws.sorted_values(), ws.weights(), state, side, score);
}

}  // namespace robustbp
