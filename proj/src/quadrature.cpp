#include "robustbp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace robustbp {

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1].
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.000000000000000};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct PanelResult {
    double kronrod;
    double err;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double f1 = f(c - x);
        const double f2 = f(c + x);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    resk *= h;
    resg *= h;
    return {resk, std::fabs(resk - resg)};
}

double adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                int depth) {
    const PanelResult r = gk15(f, a, b);
    if (r.err <= abs_tol || depth <= 0 || b - a < 1e-14 * std::fmax(1.0, std::fmax(std::fabs(a), std::fabs(b))))
        return r.kronrod;
    const double c = 0.5 * (a + b);
    return adaptive(f, a, c, 0.5 * abs_tol, depth - 1) +
           adaptive(f, c, b, 0.5 * abs_tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 int max_depth) {
    if (a == b) return 0.0;
    const double v = adaptive(f, a, b, abs_tol, max_depth);
    if (!std::isfinite(v)) throw std::runtime_error("quadrature: non-finite integral");
    return v;
}

double expect_range(const PopulationModel& model, const std::function<double(double)>& g,
                    double u_lo, double u_hi, const std::vector<double>& x_breaks,
                    double abs_tol) {
    if (u_hi <= u_lo) return 0.0;
    // keep nodes off the exact endpoints (the quantile may be infinite there)
    constexpr double clamp = 0x1.0p-53;
    auto h = [&](double u) {
        u = std::fmin(std::fmax(u, clamp), 1.0 - clamp);
        return g(model.quantile(u));
    };
    // graded panels toward u = 0 and u = 1: the quantile transform can be
    // singular there and a single adaptive pass underestimates the error
    std::vector<double> cuts = {u_lo, u_hi};
    for (double d : {1e-16, 1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.1}) {
        if (u_lo < d && d < u_hi) cuts.push_back(d);
        const double e = 1.0 - d;
        if (u_lo < e && e < u_hi) cuts.push_back(e);
    }
    for (double b : x_breaks) {
        if (!std::isfinite(b)) continue;
        const double u = model.cdf(b);
        if (u_lo < u && u < u_hi) cuts.push_back(u);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    const double piece_tol = abs_tol / double(cuts.size());
    for (std::size_t k = 1; k < cuts.size(); ++k)
        total += integrate(h, cuts[k - 1], cuts[k], piece_tol);
    return total;
}

}  // namespace robustbp
