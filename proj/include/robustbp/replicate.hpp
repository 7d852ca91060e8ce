#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace robustbp {

// Desk-scale presets shrink replication counts only, never the formulas.
enum class ScalePreset { desk, full };

struct ReplicateConfig {
    std::string experiment;  // fig_location_curves, fig_two_stage, fig_test_vshape,
                             // fig_gap_vs_n, fig_two_sample_vshape, fig_pit
    ScalePreset preset = ScalePreset::desk;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = ".";
};

// Runs the experiment and returns the files written (CSV data + JSON manifest).
std::vector<std::string> run_replicate(const ReplicateConfig& config);

std::vector<std::string> replicate_experiment_ids();

}  // namespace robustbp
