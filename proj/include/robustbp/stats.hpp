#pragma once

#include <vector>

namespace robustbp {

// One-sample Kolmogorov-Smirnov statistic against a CDF given as sorted
// probability transforms u_i = F0(x_i).
double ks_statistic_uniform(std::vector<double> u);

// Asymptotic KS p-value with Stephens' small-sample correction.
double ks_pvalue(double d, int n);

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // unbiased

// OLS slope of y on x plus the one-sided p-value for H1: slope < 0.
struct SlopeTest {
    double slope = 0;
    double stderr_slope = 0;
    double t = 0;
    double p_one_sided_negative = 1.0;
};
SlopeTest slope_test(const std::vector<double>& x, const std::vector<double>& y);

// Student-t CDF (via the regularized incomplete beta function).
double student_t_cdf(double t, double df);

// quantile of a sorted vector, linear interpolation (type 7)
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace robustbp
