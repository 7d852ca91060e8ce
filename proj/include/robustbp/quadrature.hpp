#pragma once

#include <functional>
#include <vector>

#include "robustbp/distributions.hpp"
#include "robustbp/tolerances.hpp"

namespace robustbp {

// Adaptive Gauss-Kronrod (G7,K15) on a finite interval.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = tol::quadrature_abs, int max_depth = 48);

// E_F[g(X) ; u_lo < F(X) <= u_hi] = \int_{u_lo}^{u_hi} g(Q(u)) du.
// g must be bounded near the endpoints (all scores here are); the quantile
// substitution makes heavy tails (Cauchy) routine. Known kinks or jumps of g
// (in x space) must be passed as x_breaks: panels are cut there, since the
// error estimate alone can miss a jump sitting next to a panel edge.
double expect_range(const PopulationModel& model, const std::function<double(double)>& g,
                    double u_lo, double u_hi, const std::vector<double>& x_breaks = {},
                    double abs_tol = tol::quadrature_abs);

inline double expect(const PopulationModel& model, const std::function<double(double)>& g,
                     const std::vector<double>& x_breaks = {},
                     double abs_tol = tol::quadrature_abs) {
    return expect_range(model, g, 0.0, 1.0, x_breaks, abs_tol);
}

}  // namespace robustbp
