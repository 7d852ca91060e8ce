#pragma once

#include <optional>

#include "robustbp/sample.hpp"
#include "robustbp/score.hpp"

namespace robustbp {

// Which solution of a flat estimating equation to report. The bound
// constructions need the largest/smallest root explicitly; midpoint is the
// canonical estimate.
enum class RootSelect { smallest, midpoint, largest };

struct FitResult {
    double theta_hat = 0.0;
    std::optional<double> sigma_hat;
    std::optional<double> se_hat;
    double residual = 0.0;
    bool breakdown = false;  // root escaped to +-infinity
};

// sum_i psi(x_i - theta); +-infinity observations contribute psi(+-inf).
double score_sum(const Sample& sample, const ScoreFamily& score, double theta);
double score_sum_scaled(const Sample& sample, const ScoreFamily& score, double theta,
                        double sigma);
double weighted_score_sum(const WeightedSample& ws, const ScoreFamily& score, double theta);
double chi_sum(const Sample& sample, const ScaleScoreFamily& chi, double sigma);

// Location M-estimate: root of sum_i psi(x_i - theta) = 0.
FitResult solve_location(const Sample& sample, const ScoreFamily& score,
                         RootSelect select = RootSelect::midpoint);

// Scale M-estimate: positive root of sum_i chi(x_i / sigma) = 0, found on log sigma.
FitResult solve_scale(const Sample& sample, const ScaleScoreFamily& chi,
                      RootSelect select = RootSelect::midpoint);

// Scale step of the two-stage estimator: the scale M-estimate of the
// median-centered sample, which makes the two-stage procedure translation
// equivariant.
double two_stage_scale(const Sample& sample, const ScaleScoreFamily& chi);

// Two-stage: sigma_hat first, then the root of sum_i psi((x_i - theta)/sigma_hat) = 0.
FitResult solve_two_stage(const Sample& sample, const ScoreFamily& score,
                          const ScaleScoreFamily& chi, RootSelect select = RootSelect::midpoint);

// Plug-in standard error sqrt(sum psi(x-theta)^2 / (sum psi'(x-theta))^2),
// evaluated at theta = theta_hat (regular) or theta = theta0 (restricted).
double plugin_se(const Sample& sample, const ScoreFamily& score, double theta);

// Same ratio for standardized residuals (x - theta)/sigma (two-stage tests).
double plugin_se_ratio(const Sample& sample, const ScoreFamily& score, double theta,
                       double sigma);

// Weighted location: root of sum_i w_i psi(x_i - theta) = 0.
FitResult solve_location_weighted(const WeightedSample& ws, const ScoreFamily& score,
                                  RootSelect select = RootSelect::midpoint);

}  // namespace robustbp
