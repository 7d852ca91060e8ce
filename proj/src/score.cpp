#include "robustbp/score.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>

#include "robustbp/distributions.hpp"
#include "robustbp/quadrature.hpp"
#include "robustbp/roots.hpp"
#include "robustbp/tolerances.hpp"

namespace robustbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// unscaled pseudo-Huber pieces; psi(u) = (sqrt(1+4u^2)-1)/(2u), psi'(u) = 2/(s^2+s)
double sc_psi(double u) {
    if (u == 0.0) return 0.0;
    const double s = std::sqrt(1.0 + 4.0 * u * u);
    return 2.0 * u / (s + 1.0);  // (s-1)/(2u) rationalized, stable near 0
}

double sc_dpsi(double u) {
    const double s = std::sqrt(1.0 + 4.0 * u * u);
    return 2.0 / (s * s + s);
}

// numeric sup of |d/du psi'(u)| for the smooth families, inflated for safety;
// enters SE bounds only through a conservative modulus.
double numeric_second_deriv_bound(const std::function<double(double)>& dpsi) {
    double best = 0.0;
    const double h = 1e-4;
    for (double u = 0.0; u <= 8.0; u += 1e-3) {
        const double d = std::fabs(dpsi(u + h) - dpsi(u - h)) / (2.0 * h);
        best = std::fmax(best, d);
    }
    return best * 1.05;
}

}  // namespace

ScoreFamily ScoreFamily::huber(double delta, DerivConvention conv) {
    if (!(delta > 0)) throw std::invalid_argument("huber: delta must be positive");
    ScoreFamily f;
    f.kind_ = ScoreKind::huber;
    f.delta_ = delta;
    f.conv_ = conv;
    f.psi_pos_inf_ = delta;
    f.psi_neg_inf_ = -delta;
    f.psi_max_ = delta;
    f.lipschitz_ = 1.0;
    return f;
}

ScoreFamily ScoreFamily::logcosh(double delta) {
    if (!(delta > 0)) throw std::invalid_argument("logcosh: delta must be positive");
    ScoreFamily f;
    f.kind_ = ScoreKind::logcosh;
    f.delta_ = delta;
    f.psi_pos_inf_ = delta;
    f.psi_neg_inf_ = -delta;
    f.psi_max_ = delta;
    f.lipschitz_ = 1.0;
    // |d/dx sech^2(x/d)| <= (4/(3*sqrt(3)))/d
    f.second_deriv_bound_ = 4.0 / (3.0 * std::sqrt(3.0)) / delta;
    return f;
}

ScoreFamily ScoreFamily::self_concordant(double delta) {
    if (!(delta > 0)) throw std::invalid_argument("self_concordant: delta must be positive");
    ScoreFamily f;
    f.kind_ = ScoreKind::self_concordant;
    f.delta_ = delta;
    f.psi_pos_inf_ = delta;
    f.psi_neg_inf_ = -delta;
    f.psi_max_ = delta;
    f.lipschitz_ = 1.0;
    static const double unscaled_bound = numeric_second_deriv_bound(sc_dpsi);
    f.second_deriv_bound_ = unscaled_bound / delta;
    return f;
}

ScoreFamily ScoreFamily::identity() {
    ScoreFamily f;
    f.kind_ = ScoreKind::identity;
    f.delta_ = 1.0;
    f.psi_pos_inf_ = kInf;
    f.psi_neg_inf_ = -kInf;
    f.psi_max_ = kInf;
    f.lipschitz_ = 1.0;
    return f;
}

ScoreFamily ScoreFamily::sign() {
    ScoreFamily f;
    f.kind_ = ScoreKind::sign;
    f.delta_ = 1.0;
    f.psi_pos_inf_ = 1.0;
    f.psi_neg_inf_ = -1.0;
    f.psi_max_ = 1.0;
    f.lipschitz_ = kInf;
    return f;
}

ScoreFamily ScoreFamily::tabulated(std::vector<double> ts, std::vector<double> values) {
    if (ts.size() != values.size() || ts.size() < 2)
        throw std::invalid_argument("tabulated: need two aligned grids");
    for (size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i] > ts[i - 1]) || values[i] < values[i - 1])
            throw std::invalid_argument("tabulated: grid must be increasing, values nondecreasing");
    ScoreFamily f;
    f.kind_ = ScoreKind::tabulated;
    f.psi_pos_inf_ = values.back();
    f.psi_neg_inf_ = values.front();
    f.psi_max_ = std::fmax(std::fabs(values.back()), std::fabs(values.front()));
    double lip = 0.0;
    for (size_t i = 1; i < ts.size(); ++i)
        lip = std::fmax(lip, (values[i] - values[i - 1]) / (ts[i] - ts[i - 1]));
    f.lipschitz_ = lip;
    f.tab_t_ = std::move(ts);
    f.tab_v_ = std::move(values);
    return f;
}

double ScoreFamily::evaluate(double t) const {
    if (std::isinf(t)) return t > 0 ? psi_pos_inf_ : psi_neg_inf_;
    switch (kind_) {
        case ScoreKind::huber:
            return std::clamp(t, -delta_, delta_);
        case ScoreKind::logcosh:
            return delta_ * std::tanh(t / delta_);
        case ScoreKind::self_concordant:
            return delta_ * sc_psi(t / delta_);
        case ScoreKind::identity:
            return t;
        case ScoreKind::sign:
            return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
        case ScoreKind::tabulated: {
            if (t < tab_t_.front() || t > tab_t_.back())
                throw std::domain_error("tabulated score: argument outside grid");
            auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
            if (it == tab_t_.end()) return tab_v_.back();
            const size_t j = size_t(it - tab_t_.begin());
            if (j == 0) return tab_v_.front();
            const double w = (t - tab_t_[j - 1]) / (tab_t_[j] - tab_t_[j - 1]);
            return tab_v_[j - 1] + w * (tab_v_[j] - tab_v_[j - 1]);
        }
    }
    return 0.0;
}

double ScoreFamily::derivative(double t) const {
    if (std::isinf(t)) return kind_ == ScoreKind::identity ? 1.0 : 0.0;
    switch (kind_) {
        case ScoreKind::huber: {
            const double ind = std::fabs(t) <= delta_ ? 1.0 : 0.0;
            return conv_ == DerivConvention::delta_scaled ? delta_ * ind : ind;
        }
        case ScoreKind::logcosh: {
            const double c = std::cosh(t / delta_);
            return 1.0 / (c * c);
        }
        case ScoreKind::self_concordant:
            return sc_dpsi(t / delta_);
        case ScoreKind::identity:
            return 1.0;
        case ScoreKind::sign:
            return 0.0;
        case ScoreKind::tabulated: {
            if (t < tab_t_.front() || t > tab_t_.back())
                throw std::domain_error("tabulated score: argument outside grid");
            auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
            size_t j = size_t(it - tab_t_.begin());
            if (j == 0) j = 1;
            if (j == tab_t_.size()) j = tab_t_.size() - 1;
            return (tab_v_[j] - tab_v_[j - 1]) / (tab_t_[j] - tab_t_[j - 1]);
        }
    }
    return 0.0;
}

double ScoreFamily::deriv_modulus(double t) const {
    t = std::fabs(t);
    if (t == 0.0) return 0.0;
    const double cap = deriv_at_zero();
    switch (kind_) {
        case ScoreKind::huber:
            return cap;  // the band indicator jumps by its full height
        case ScoreKind::logcosh:
        case ScoreKind::self_concordant:
            return std::fmin(cap, second_deriv_bound_ * t);
        case ScoreKind::identity:
        case ScoreKind::sign:
            return 0.0;
        case ScoreKind::tabulated:
            return lipschitz_;  // crude but valid
    }
    return cap;
}

std::vector<double> ScoreFamily::nonsmooth_points(double center) const {
    switch (kind_) {
        case ScoreKind::huber:
            return {center - delta_, center + delta_};
        case ScoreKind::sign:
            return {center};
        case ScoreKind::tabulated: {
            std::vector<double> p;
            for (double t : tab_t_) p.push_back(center + t);
            return p;
        }
        default:
            return {};
    }
}

std::string ScoreFamily::name() const {
    switch (kind_) {
        case ScoreKind::huber: return "huber";
        case ScoreKind::logcosh: return "logcosh";
        case ScoreKind::self_concordant: return "selfconcordant";
        case ScoreKind::identity: return "identity";
        case ScoreKind::sign: return "sign";
        case ScoreKind::tabulated: return "tabulated";
    }
    return "?";
}

ScaleScoreFamily::ScaleScoreFamily(ScoreFamily base, double fisher_constant)
    : base_(std::move(base)), b_(fisher_constant) {
    chi_inf_ = base_.psi_max() * base_.psi_max() - b_;
    if (!(b_ > 0) || !(chi_inf_ > 0))
        throw std::invalid_argument("scale score: need chi(0) < 0 < chi(inf)");
}

double ScaleScoreFamily::evaluate(double t) const {
    const double p = base_.evaluate(std::fabs(t));
    return p * p - b_;
}

double fisher_constant(const ScoreFamily& family, const PopulationModel& model) {
    using Key = std::tuple<int, double, int, std::string, double, double>;
    static std::map<Key, double> cache;
    static std::mutex mu;

    const bool cacheable = family.kind() != ScoreKind::tabulated && model.kind != ModelKind::custom;
    Key key{int(family.kind()), family.delta(), int(model.kind), {}, model.loc, model.scale};
    if (cacheable) {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const double b = expect(model,
                            [&](double x) {
                                const double p = family.evaluate(x);
                                return p * p;
                            },
                            family.nonsmooth_points(0.0));
    if (!std::isfinite(b)) throw std::runtime_error("fisher_constant: integral diverged");
    if (cacheable) {
        std::lock_guard<std::mutex> lock(mu);
        cache[key] = b;
    }
    return b;
}

ScaleScoreFamily make_scale_family(const ScoreFamily& base, const PopulationModel& model) {
    return ScaleScoreFamily(base, fisher_constant(base, model));
}

namespace {

// E[psi']^2 / E[psi^2] under `model`, always with the analytic a.e. derivative.
double efficiency(ScoreKind kind, double delta, const PopulationModel& model) {
    ScoreFamily f = make_score_by_name(
        kind == ScoreKind::huber ? "huber"
                                 : (kind == ScoreKind::logcosh ? "logcosh" : "selfconcordant"),
        delta, DerivConvention::indicator);
    const auto cuts = f.nonsmooth_points(0.0);
    const double num = expect(model, [&](double x) { return f.derivative(x); }, cuts);
    const double den = expect(model,
                              [&](double x) {
                                  const double p = f.evaluate(x);
                                  return p * p;
                              },
                              cuts);
    return num * num / den;
}

}  // namespace

double tune_for_efficiency(ScoreKind kind, double target_eff, const PopulationModel& model) {
    if (!(target_eff > 0.0 && target_eff < 1.0))
        throw std::domain_error("tune_for_efficiency: target must lie in (0,1)");
    if (kind != ScoreKind::huber && kind != ScoreKind::logcosh &&
        kind != ScoreKind::self_concordant)
        throw std::domain_error("tune_for_efficiency: only the tunable robust families");

    // efficiency is increasing in delta toward 1
    double lo = 1e-3, hi = 1.0;
    while (efficiency(kind, hi, model) < target_eff) {
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("tune_for_efficiency: no bracket");
    }
    while (hi - lo > tol::tuning_delta) {
        const double mid = 0.5 * (lo + hi);
        (efficiency(kind, mid, model) < target_eff ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ScoreFamily make_score_by_name(const std::string& name, double delta, DerivConvention conv) {
    if (name == "huber") return ScoreFamily::huber(delta, conv);
    if (name == "logcosh") return ScoreFamily::logcosh(delta);
    if (name == "selfconcordant" || name == "self_concordant")
        return ScoreFamily::self_concordant(delta);
    if (name == "identity") return ScoreFamily::identity();
    if (name == "sign") return ScoreFamily::sign();
    throw std::invalid_argument("unknown score family: " + name);
}

}  // namespace robustbp
