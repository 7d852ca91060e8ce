#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "robustbp/estimators.hpp"
#include "robustbp/sample.hpp"
#include "robustbp/score.hpp"

namespace robustbp {

enum class Side { plus, minus, two_sided };
enum class ValueKind { exact, lower_bound, upper_bound };

// One-sided and two-sided m-sensitivities at a single contamination level m.
struct SensitivityPoint {
    int m = 0;
    double eta_plus = 0.0;
    double eta_minus = 0.0;
    double eta_two_sided = 0.0;  // max of the sides
    ValueKind kind = ValueKind::exact;
    bool breakdown = false;  // some side is infinite

    void finish();  // fills eta_two_sided / breakdown
};

struct BreakdownResult {
    double eta = 0.0;
    Side side = Side::two_sided;
    int k = 0;  // breakdown point is k/n
    int n = 0;
    ValueKind kind = ValueKind::exact;
    bool attained = true;  // false if no m within the scan qualified

    double bp() const { return n > 0 ? double(k) / double(n) : 0.0; }
};

// Contamination target sets C_L / C_R for upper-bound searches. Defaults to
// {x_(n), +inf} on the left scheme and {x_(1), -inf} on the right; the A-grid
// adds targets anchor +- a*delta with psi(a*delta) on a fixed ladder of levels.
struct SchemeConfig {
    bool use_a_grid = false;
    std::vector<double> a_levels = {-0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6,  0.7, 0.8, 0.9, 1.0};
};

// a values with psi_delta(a*delta) = level*delta, per family (finite ones only).
std::vector<double> a_grid_offsets(const ScoreFamily& score, const std::vector<double>& levels);

// ---- location: exact order-statistic formulas ----
double location_sensitivity_side(const Sample& sample, const ScoreFamily& score,
                                 double theta_hat, int m, Side side);
SensitivityPoint location_sensitivity(const Sample& sample, const ScoreFamily& score,
                                      double theta_hat, int m);
BreakdownResult location_bp(const Sample& sample, const ScoreFamily& score, double theta_hat,
                            double eta, Side side);

// ---- scale: exact formulas on the |x| order statistics ----
double scale_sensitivity_side(const Sample& sample, const ScaleScoreFamily& chi,
                              double sigma_hat, int m, Side side);
SensitivityPoint scale_sensitivity(const Sample& sample, const ScaleScoreFamily& chi,
                                   double sigma_hat, int m);
BreakdownResult scale_bp(const Sample& sample, const ScaleScoreFamily& chi, double sigma_hat,
                         double eta, Side side);

// ---- two-stage location: attainable lower / rescaling upper bounds ----
// lower: attainable displacement from the explicit contamination schemes;
// upper: sign-split rescaling bound. lower <= true sensitivity <= upper.
double two_stage_sensitivity_lower(const Sample& sample, const ScoreFamily& score,
                                   const ScaleScoreFamily& chi, int m, Side side,
                                   const SchemeConfig& scheme = {});
double two_stage_sensitivity_upper(const Sample& sample, const ScoreFamily& score,
                                   const ScaleScoreFamily& chi, int m, Side side);
// valid envelope [sigma_lo, sigma_hi] for the two-stage scale under any
// m-point contamination (median shift folded into the order statistics)
std::pair<double, double> two_stage_scale_envelope(const Sample& sample,
                                                   const ScaleScoreFamily& chi, int m);
std::pair<SensitivityPoint, SensitivityPoint> two_stage_sensitivity_bounds(
    const Sample& sample, const ScoreFamily& score, const ScaleScoreFamily& chi, int m,
    const SchemeConfig& scheme = {});
std::pair<BreakdownResult, BreakdownResult> two_stage_bp_bounds(
    const Sample& sample, const ScoreFamily& score, const ScaleScoreFamily& chi, double eta,
    Side side, const SchemeConfig& scheme = {});

// ---- plug-in SE at a fixed theta0: exact ordered-residual formulas ----
double se_restricted_sensitivity_side(const Sample& sample, const ScoreFamily& score,
                                      double theta0, int m, Side side);
SensitivityPoint se_restricted_sensitivity(const Sample& sample, const ScoreFamily& score,
                                           double theta0, int m);

// ---- plug-in SE at theta_hat: certified upper bounds ----
double se_plugin_sensitivity_upper_side(const Sample& sample, const ScoreFamily& score, int m,
                                        Side side, bool envelope = false);
SensitivityPoint se_plugin_sensitivity_upper(const Sample& sample, const ScoreFamily& score,
                                             int m, bool envelope = false);
// attainable displacement of se(theta_hat) under the explicit schemes
double se_plugin_sensitivity_lower_side(const Sample& sample, const ScoreFamily& score, int m,
                                        Side side, const SchemeConfig& scheme = {});

// ---- weighted location: mass-splitting generalization ----
double weighted_location_sensitivity_side(const WeightedSample& ws, const ScoreFamily& score,
                                          double theta_hat_b, int m, Side side);
BreakdownResult weighted_location_bp(const WeightedSample& ws, const ScoreFamily& score,
                                     double theta_hat_b, double eta, Side side);

// ---- curves ----
struct EstimatorSpec {
    enum class Kind { location, scale, two_stage, se_restricted, se_plugin };
    Kind kind = Kind::location;
    double theta0 = 0.0;  // se_restricted only
};

struct CurveEntry {
    SensitivityPoint lower;
    SensitivityPoint upper;  // == lower for exact estimators
    bool exact = true;
};

std::vector<CurveEntry> sensitivity_curve(const Sample& sample, const ScoreFamily& score,
                                          const std::optional<ScaleScoreFamily>& chi,
                                          const EstimatorSpec& spec,
                                          const std::vector<int>& m_grid,
                                          const SchemeConfig& scheme = {});

}  // namespace robustbp
