#pragma once

#include <array>
#include <vector>

#include "robustbp/distributions.hpp"
#include "robustbp/sample.hpp"
#include "robustbp/score.hpp"
#include "robustbp/sensitivity.hpp"

namespace robustbp {

// zero of E_F[psi(X - theta)]
double population_location(const PopulationModel& model, const ScoreFamily& score);

// population m-sensitivity eta_{eps,side}: zero of the trimmed score equation
//   H_+(eta) = int_{q_eps}^{inf} psi(x - theta0 - eta) dF + eps * B
//   H_-(eta) = int_{-inf}^{q_{1-eps}} psi(x - theta0 + eta) dF - eps * B
double population_sensitivity(const PopulationModel& model, const ScoreFamily& score, double eps,
                              Side side);

// H_{side}(eta) itself, for residual checks
double population_h(const PopulationModel& model, const ScoreFamily& score, double eps,
                    double eta, Side side);

struct MaxbiasCurve {
    std::vector<double> eps;
    std::vector<double> eta_plus, eta_minus;
    std::vector<double> deta_plus, deta_minus;  // d eta / d eps along the curve
};

// integrates the maxbias ODEs from (0,0) by RK4 with the given step
MaxbiasCurve maxbias_curve(const PopulationModel& model, const ScoreFamily& score,
                           double eps_max, double step);

// inverts eps -> eta_{eps,side}
double population_bp(const PopulationModel& model, const ScoreFamily& score, double eta,
                     Side side);

// asymptotic variance of sqrt(n) (eta_hat - eta_eps); computed twice (matrix
// sandwich and expanded scalar form) and cross-asserted
double asymptotic_variance_sensitivity(const PopulationModel& model, const ScoreFamily& score,
                                       double eps, Side side);

// asymptotic variance of sqrt(n) (BP_hat - eps*)
double asymptotic_variance_bp(const PopulationModel& model, const ScoreFamily& score,
                              double eps_star, Side side);

// d eta_{eps,side} / d eps at eps (the maxbias slope)
double maxbias_slope(const PopulationModel& model, const ScoreFamily& score, double eps,
                     Side side);

// coupled estimating-equation state (theta, eta, q, eps)
struct ZState {
    double theta = 0;
    double eta = 0;
    double q = 0;
    double eps = 0;
};

// empirical residual E_{F_n}[Psi_{side}(X; state)] as a 3-vector
std::array<double, 3> zsystem_residual(const Sample& sample, const ZState& state, Side side,
                                       const ScoreFamily& score);
std::array<double, 3> zsystem_residual(const WeightedSample& ws, const ZState& state, Side side,
                                       const ScoreFamily& score);

}  // namespace robustbp
