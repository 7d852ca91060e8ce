#pragma once

// Numeric tolerances shared across the library. Stated once, reused everywhere.
namespace robustbp::tol {

inline constexpr double theta_rel = 1e-10;       // relative tolerance on solved locations/scales
inline constexpr double weight_sum = 1e-12;      // normalized weights must sum to 1 within this
inline constexpr double bisect_rel = 1e-12;      // bracket width for sensitivity bisections
inline constexpr double quadrature_abs = 1e-10;  // adaptive quadrature absolute tolerance
inline constexpr double population_root = 1e-9;  // population root-solving tolerance
inline constexpr double tuning_delta = 1e-6;     // bisection tolerance for efficiency tuning
inline constexpr int max_bisect_iter = 200;      // iteration cap for all bracketed bisections
inline constexpr int max_bracket_doublings = 60; // bracket expansion cap (2^60 * spread)

}  // namespace robustbp::tol
