#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace robustbp {

struct PopulationModel;  // distributions.hpp

enum class ScoreKind { huber, logcosh, self_concordant, identity, sign, tabulated };

// Huber's psi' at the kink band: indicator I{|t|<=delta} or delta*I{|t|<=delta}.
enum class DerivConvention { indicator, delta_scaled };

// A monotone location score psi (= derivative of a convex loss) together with
// the analytic metadata every breakdown formula consumes: the limits psi(+-inf),
// psi_max, the Lipschitz constant, and an a.e. derivative.
class ScoreFamily {
  public:
    static ScoreFamily huber(double delta, DerivConvention conv = DerivConvention::indicator);
    static ScoreFamily logcosh(double delta);
    static ScoreFamily self_concordant(double delta);
    static ScoreFamily identity();
    static ScoreFamily sign();
    // Monotone interpolation table on [ts.front(), ts.back()]; finite evaluation
    // outside the grid is an error, +-inf map to the endpoint values.
    static ScoreFamily tabulated(std::vector<double> ts, std::vector<double> values);

    ScoreKind kind() const { return kind_; }
    double delta() const { return delta_; }
    DerivConvention deriv_convention() const { return conv_; }

    double psi_pos_inf() const { return psi_pos_inf_; }
    double psi_neg_inf() const { return psi_neg_inf_; }
    double psi_max() const { return psi_max_; }
    bool bounded() const { return std::isfinite(psi_max_); }
    double lipschitz() const { return lipschitz_; }

    // psi(t); t may be +-infinity.
    double evaluate(double t) const;
    // a.e. derivative under deriv_convention; psi'(+-inf) = 0 for bounded kinds.
    double derivative(double t) const;
    double deriv_at_zero() const { return derivative(0.0); }
    // sup_x |psi'(x+t) - psi'(x)| or a safe upper bound of it (used in SE bounds).
    double deriv_modulus(double t) const;
    // points where psi or psi' is nonsmooth, for quadrature panel cuts
    std::vector<double> nonsmooth_points(double center) const;

    std::string name() const;

  private:
    ScoreFamily() = default;
    ScoreKind kind_ = ScoreKind::huber;
    double delta_ = 1.0;
    DerivConvention conv_ = DerivConvention::indicator;
    double psi_pos_inf_ = 0, psi_neg_inf_ = 0, psi_max_ = 0, lipschitz_ = 0;
    double second_deriv_bound_ = 0;  // sup |psi''| for smooth kinds
    std::vector<double> tab_t_, tab_v_;
};

// Scale score chi(t) = psi(t)^2 - b with the Fisher consistency constant b.
class ScaleScoreFamily {
  public:
    ScaleScoreFamily(ScoreFamily base, double fisher_constant);

    const ScoreFamily& base() const { return base_; }
    double fisher_constant() const { return b_; }
    double chi_pos_inf() const { return chi_inf_; }
    double chi_at_zero() const { return -b_; }

    // chi(t) = psi(t)^2 - b; even in t; t may be +-infinity.
    double evaluate(double t) const;

  private:
    ScoreFamily base_;
    double b_;
    double chi_inf_;
};

// b = E_model[psi(Z)^2], so that E[chi(Z)] = 0 at the model. Cached per
// (kind, delta, model descriptor) for the built-in model kinds.
double fisher_constant(const ScoreFamily& family, const PopulationModel& model);

ScaleScoreFamily make_scale_family(const ScoreFamily& base, const PopulationModel& model);

// delta achieving the target asymptotic efficiency E[psi']^2 / E[psi^2]
// relative to the mean at `model` (standard normal in practice).
double tune_for_efficiency(ScoreKind kind, double target_eff, const PopulationModel& model);

ScoreFamily make_score_by_name(const std::string& name, double delta,
                               DerivConvention conv = DerivConvention::indicator);

}  // namespace robustbp
