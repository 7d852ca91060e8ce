#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robustbp/sensitivity.hpp"

namespace robustbp {

enum class TestKind {
    wald,
    restricted_wald,
    score_test,
    restricted_score,
    two_sample_wald,
    fixed_sigma_wald
};

enum class Sidedness { two_sided, one_sided_upper, one_sided_lower };

// Two-sample contamination budget: k1 + k2 = m split (default) or m in each sample.
enum class BudgetMode { total, per_sample };

struct TestSpec {
    TestKind kind = TestKind::wald;
    double alpha = 0.05;
    double theta0 = 0.0;
    Sidedness sided = Sidedness::two_sided;
    std::optional<double> sigma0;  // fixed_sigma_wald; restricted_score S override
    SchemeConfig scheme;
    BudgetMode budget = BudgetMode::total;

    double critical_z() const;
};

struct RunResult {
    int decision = 0;      // 1 = reject
    double statistic = 0;  // estimate (or score) minus null, standardized
    double lower = 0;      // acceptance-interval endpoints, centered at theta0
    double upper = 0;
    double estimate = 0;   // theta_hat - theta0 (or V_n, or contrast)
    double se = 0;
    bool degenerate = false;
    std::string note;
};

struct BpBracket {
    int lower_k = 0;  // BP in [lower_k/denom, upper_k/denom]
    int upper_k = 0;
    int denom = 1;
    bool lower_attained = true;
    bool upper_attained = true;
    bool exact = false;  // lower == upper by construction

    double lower() const { return double(lower_k) / denom; }
    double upper() const { return double(upper_k) / denom; }
};

struct TestAudit {
    RunResult run;
    BpBracket reject_bp;  // meaningful when run.decision == 1
    BpBracket accept_bp;  // meaningful when run.decision == 0
    const BpBracket& active() const { return run.decision ? reject_bp : accept_bp; }
};

// One-sample tests (wald / restricted_wald / fixed_sigma_wald / score kinds).
RunResult run_test(const Sample& sample, const ScoreFamily& score, const TestSpec& spec);
// Two-sample Wald-type test of equal locations.
RunResult run_test(const Sample& x, const Sample& y, const ScoreFamily& score,
                   const TestSpec& spec);

// Breakdown brackets for interval tests built from theta_hat and a standard error.
TestAudit test_bp_bounds(const Sample& sample, const ScoreFamily& score, const TestSpec& spec);

// Score-type tests: V_n = n^{-1/2} sum psi(x_i - theta0) with empirical or fixed S.
TestAudit score_test_bp(const Sample& sample, const ScoreFamily& score, const TestSpec& spec);

// Two-sample Wald-type test; bp normalized by min(n_x, n_y).
TestAudit two_sample_bp_bounds(const Sample& x, const Sample& y, const ScoreFamily& score,
                               const TestSpec& spec);

// Bounds on the contaminated standardized statistic at contamination level m.
// `low` is attained by the returned contamination; `high` is conservative.
struct StatisticBand {
    double low = 0;
    double high = 0;
    std::vector<double> x_low;  // contamination realizing `low`
    std::vector<double> y_low;
};
StatisticBand statistic_band(const Sample& x, const Sample& y, const ScoreFamily& score, int m,
                             const TestSpec& spec);

// Upper bound on the one-sided sensitivity of the standardized-residual SE
// ratio used by two-stage Wald tests (documented loose).
double two_stage_test_se_upper_side(const Sample& sample, const ScoreFamily& score,
                                    const ScaleScoreFamily& chi, int m, Side side);
SensitivityPoint two_stage_test_se_upper(const Sample& sample, const ScoreFamily& score,
                                         const ScaleScoreFamily& chi, int m);

}  // namespace robustbp
