#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "robustbp/distributions.hpp"
#include "robustbp/sensitivity.hpp"

namespace robustbp {

enum class CiMethod { basic, percentile };
enum class WeightLaw { exponential_unit, custom };

struct BootstrapConfig {
    int replicates = 1000;  // B
    WeightLaw law = WeightLaw::exponential_unit;
    std::function<double(Rng&)> custom_law;  // should have mean 1, variance 1
    bool custom_law_validated = true;        // false marks a law violating the moment contract
    std::uint64_t seed = 0;
    std::vector<double> ci_levels = {0.8, 0.95};
    CiMethod method = CiMethod::basic;
    int threads = 1;
};

struct BootstrapSummary {
    double point = 0.0;            // statistic on the original data
    std::vector<double> draws;     // successful replicates, replicate order
    std::map<double, std::pair<double, double>> ci;  // level -> (lo, hi)
    int failures = 0;
    CiMethod method = CiMethod::basic;
};

// i.i.d. weights from the configured law, normalized to sum 1; deterministic
// given (seed, replicate_index).
std::vector<double> draw_weights(std::size_t n, const BootstrapConfig& config,
                                 std::uint64_t replicate_index);

// multiplier bootstrap of the one-sided m-sensitivity of the location estimator
BootstrapSummary bootstrap_sensitivity(const Sample& sample, const ScoreFamily& score, int m,
                                       Side side, const BootstrapConfig& config);

// multiplier bootstrap of the threshold breakdown point at level eta
BootstrapSummary bootstrap_bp(const Sample& sample, const ScoreFamily& score, double eta,
                              Side side, const BootstrapConfig& config);

// randomized probability-integral-transform diagnostic of bootstrap validity
struct PitResult {
    double ks_stat = 0.0;
    double p_value = 0.0;
    std::vector<double> u;  // M randomized ranks; uniform under a valid bootstrap
};
PitResult pit_uniformity(const PopulationModel& model, const ScoreFamily& score, double eps,
                         int n, int outer_reps, int inner_reps, Side side,
                         const BootstrapConfig& config);

}  // namespace robustbp
