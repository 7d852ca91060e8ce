#pragma once

#include <optional>
#include <vector>

#include "robustbp/sensitivity.hpp"
#include "robustbp/tests.hpp"

namespace robustbp {

// Exhaustive worst-case contamination search on small instances. Ground truth
// for every closed form and bound in the library.
struct OracleConfig {
    std::vector<double> extra_candidates;  // added to {+-inf, data points, center grid}
    int max_n = 8;
    // `constant` places all m replaced points at one shared candidate value
    // (sufficient for coordinate-monotone targets: location, scale);
    // `full` enumerates mixed assignments (SE and two-stage targets).
    enum class Assign { constant, full } assign = Assign::constant;
    bool refine = false;  // golden-section refinement around the best placement
    BudgetMode budget = BudgetMode::total;
};

struct OracleTarget {
    enum class Kind { location, scale, two_stage, se_plugin, se_restricted } kind =
        Kind::location;
    double theta0 = 0.0;  // se_restricted
};

double brute_force_sensitivity(const Sample& sample, const OracleTarget& target,
                               const ScoreFamily& score,
                               const std::optional<ScaleScoreFamily>& chi, int m, Side side,
                               const OracleConfig& config);

struct OracleBp {
    int k = 0;
    int denom = 1;
    bool flipped = true;  // false: no flip found up to ceil(n/2), value is a lower bound
    double bp() const { return double(k) / denom; }
};

OracleBp brute_force_test_bp(const Sample& sample, const ScoreFamily& score,
                             const TestSpec& spec, const OracleConfig& config);
OracleBp brute_force_test_bp(const Sample& x, const Sample& y, const ScoreFamily& score,
                             const TestSpec& spec, const OracleConfig& config);

}  // namespace robustbp
