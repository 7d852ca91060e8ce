#include "robustbp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robustbp {

double ks_statistic_uniform(std::vector<double> u) {
    if (u.empty()) throw std::invalid_argument("ks_statistic: empty");
    std::sort(u.begin(), u.end());
    const int n = int(u.size());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        d = std::fmax(d, double(i + 1) / n - u[i]);
        d = std::fmax(d, u[i] - double(i) / n);
    }
    return d;
}

double ks_pvalue(double d, int n) {
    const double sn = std::sqrt(double(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 101; ++k) {
        p += sign * std::exp(-2.0 * k * k * lambda * lambda);
        sign = -sign;
    }
    return std::fmin(std::fmax(2.0 * p, 0.0), 1.0);
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size() - 1);
}

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// continued fraction for the regularized incomplete beta (Lentz)
double betacf(double a, double b, double x) {
    const double eps = 3e-14, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(a * std::log(x) + b * std::log(1.0 - x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double df) {
    const double x = df / (df + t * t);
    const double p = 0.5 * inc_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - p : p;
}

SlopeTest slope_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("slope_test: need aligned vectors, n >= 3");
    const int n = int(x.size());
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeTest st;
    st.slope = sxy / sxx;
    const double intercept = my - st.slope * mx;
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = y[i] - intercept - st.slope * x[i];
        rss += r * r;
    }
    st.stderr_slope = std::sqrt(rss / double(n - 2) / sxx);
    st.t = st.slope / st.stderr_slope;
    st.p_one_sided_negative = student_t_cdf(st.t, double(n - 2));
    return st;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double idx = p * double(sorted.size() - 1);
    const std::size_t lo = std::size_t(idx);
    const double w = idx - double(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - w) + sorted[lo + 1] * w;
}

}  // namespace robustbp
