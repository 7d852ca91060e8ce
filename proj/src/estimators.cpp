#include "robustbp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>
#include <stdexcept>

#include "robustbp/roots.hpp"
#include "robustbp/tolerances.hpp"

namespace robustbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pick_root(const ZeroSet& zs, RootSelect select) {
    switch (select) {
        case RootSelect::smallest: return zs.lo;
        case RootSelect::largest: return zs.hi;
        case RootSelect::midpoint: return zs.midpoint();
    }
    return zs.midpoint();
}

}  // namespace

double score_sum(const Sample& sample, const ScoreFamily& score, double theta) {
    double s = 0.0;
    for (double x : sample.values()) {
        if (std::isinf(x))
            s += x > 0 ? score.psi_pos_inf() : score.psi_neg_inf();
        else
            s += score.evaluate(x - theta);
    }
    return s;
}

double score_sum_scaled(const Sample& sample, const ScoreFamily& score, double theta,
                        double sigma) {
    double s = 0.0;
    for (double x : sample.values()) {
        if (std::isinf(x))
            s += x > 0 ? score.psi_pos_inf() : score.psi_neg_inf();
        else
            s += score.evaluate((x - theta) / sigma);
    }
    return s;
}

double weighted_score_sum(const WeightedSample& ws, const ScoreFamily& score, double theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < ws.n(); ++i) {
        const double x = ws.sorted_values()[i];
        if (std::isinf(x))
            s += ws.weights()[i] * (x > 0 ? score.psi_pos_inf() : score.psi_neg_inf());
        else
            s += ws.weights()[i] * score.evaluate(x - theta);
    }
    return s;
}

double chi_sum(const Sample& sample, const ScaleScoreFamily& chi, double sigma) {
    double s = 0.0;
    for (double x : sample.values()) {
        if (std::isinf(x))
            s += chi.chi_pos_inf();
        else if (x == 0.0)
            s += chi.chi_at_zero();
        else
            s += chi.evaluate(x / sigma);
    }
    return s;
}

FitResult solve_location(const Sample& sample, const ScoreFamily& score, RootSelect select) {
    if (sample.n() == 0) throw std::domain_error("solve_location: empty sample");
    auto g = [&](double theta) { return score_sum(sample, score, theta); };
    const double center = sample.finite_center();
    const double radius = std::fmax(1.0, sample.finite_spread());
    const ZeroSet zs = find_zero_set(g, center, radius);

    FitResult fit;
    if (!zs.found) {
        fit.theta_hat = zs.midpoint();  // +-inf
        fit.breakdown = true;
        return fit;
    }
    fit.theta_hat = pick_root(zs, select);
    if (std::isinf(fit.theta_hat)) {
        fit.breakdown = true;
        return fit;
    }
    fit.residual = g(fit.theta_hat);
    return fit;
}

FitResult solve_scale(const Sample& sample, const ScaleScoreFamily& chi, RootSelect select) {
    std::size_t nonzero = 0;
    for (double x : sample.values())
        if (x != 0.0) ++nonzero;
    if (nonzero == 0) throw std::domain_error("solve_scale: all observations are zero");

    // h(s) = sum chi(x e^{-s}) is nonincreasing in s = log sigma
    auto h = [&](double s) { return chi_sum(sample, chi, std::exp(s)); };
    const double sup = double(nonzero) * chi.chi_pos_inf() +
                       double(sample.n() - nonzero) * chi.chi_at_zero();
    if (!(sup > 0.0)) throw std::domain_error("solve_scale: too many zeros, scale degenerates");

    double center = 0.0;
    {
        // start near the median absolute value
        std::vector<double> absx;
        for (double x : sample.values())
            if (x != 0.0 && std::isfinite(x)) absx.push_back(std::fabs(x));
        if (!absx.empty()) {
            std::sort(absx.begin(), absx.end());
            center = std::log(absx[absx.size() / 2]);
        }
    }
    const ZeroSet zs = find_zero_set(h, center, 2.0);
    FitResult fit;
    if (!zs.found) {
        if (std::isinf(zs.lo) && zs.lo < 0) throw std::domain_error("solve_scale: scale degenerates to zero");
        fit.sigma_hat = kInf;
        fit.breakdown = true;
        return fit;
    }
    const double s = pick_root(zs, select);
    if (std::isinf(s)) {
        if (s < 0) throw std::domain_error("solve_scale: scale degenerates to zero");
        fit.sigma_hat = kInf;
        fit.breakdown = true;
        return fit;
    }
    fit.sigma_hat = std::exp(s);
    fit.residual = h(s);
    return fit;
}

double two_stage_scale(const Sample& sample, const ScaleScoreFamily& chi) {
    double med = 0.0;
    {
        std::vector<double> fin;
        for (double v : sample.sorted())
            if (std::isfinite(v)) fin.push_back(v);
        if (!fin.empty())
            med = fin.size() % 2 == 1 ? fin[fin.size() / 2]
                                      : 0.5 * (fin[fin.size() / 2 - 1] + fin[fin.size() / 2]);
    }
    return *solve_scale(sample.shifted(-med), chi, RootSelect::midpoint).sigma_hat;
}

FitResult solve_two_stage(const Sample& sample, const ScoreFamily& score,
                          const ScaleScoreFamily& chi, RootSelect select) {
    const double sigma = two_stage_scale(sample, chi);
    FitResult fit;
    fit.sigma_hat = sigma;
    if (!std::isfinite(sigma)) {
        fit.breakdown = true;
        fit.theta_hat = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    auto g = [&](double theta) { return score_sum_scaled(sample, score, theta, sigma); };
    const ZeroSet zs = find_zero_set(g, sample.finite_center(),
                                     std::fmax(1.0, sample.finite_spread()));
    if (!zs.found) {
        fit.theta_hat = zs.midpoint();
        fit.breakdown = true;
        return fit;
    }
    fit.theta_hat = pick_root(zs, select);
    if (std::isinf(fit.theta_hat)) {
        fit.breakdown = true;
        return fit;
    }
    fit.residual = g(fit.theta_hat);
    return fit;
}

double plugin_se(const Sample& sample, const ScoreFamily& score, double theta) {
    double num = 0.0, den = 0.0;
    for (double x : sample.values()) {
        double p, dp;
        if (std::isinf(x)) {
            p = x > 0 ? score.psi_pos_inf() : score.psi_neg_inf();
            dp = score.kind() == ScoreKind::identity ? 1.0 : 0.0;
        } else {
            p = score.evaluate(x - theta);
            dp = score.derivative(x - theta);
        }
        num += p * p;
        den += dp;
    }
    if (!(den > 0.0)) throw std::domain_error("plugin_se: zero information (sum psi' = 0)");
    return std::sqrt(num) / den;
}

double plugin_se_ratio(const Sample& sample, const ScoreFamily& score, double theta,
                       double sigma) {
    double num = 0.0, den = 0.0;
    for (double x : sample.values()) {
        double p, dp;
        if (std::isinf(x)) {
            p = x > 0 ? score.psi_pos_inf() : score.psi_neg_inf();
            dp = 0.0;
        } else {
            p = score.evaluate((x - theta) / sigma);
            dp = score.derivative((x - theta) / sigma);
        }
        num += p * p;
        den += dp;
    }
    if (!(den > 0.0)) throw std::domain_error("plugin_se_ratio: zero information");
    return std::sqrt(num) / den;
}

FitResult solve_location_weighted(const WeightedSample& ws, const ScoreFamily& score,
                                  RootSelect select) {
    auto g = [&](double theta) { return weighted_score_sum(ws, score, theta); };
    double center = 0.0, spread = 1.0;
    {
        double lo = 0, hi = 0;
        bool any = false;
        for (double v : ws.sorted_values()) {
            if (!std::isfinite(v)) continue;
            if (!any) {
                lo = hi = v;
                any = true;
            } else
                hi = v;
        }
        if (any) {
            center = 0.5 * (lo + hi);
            spread = std::fmax(1.0, hi - lo);
        }
    }
    const ZeroSet zs = find_zero_set(g, center, spread);
    FitResult fit;
    if (!zs.found) {
        fit.theta_hat = zs.midpoint();
        fit.breakdown = true;
        return fit;
    }
    fit.theta_hat = pick_root(zs, select);
    if (std::isinf(fit.theta_hat)) {
        fit.breakdown = true;
        return fit;
    }
    fit.residual = g(fit.theta_hat);
    return fit;
}

}  // namespace robustbp
