#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "robustbp/tolerances.hpp"

namespace robustbp {

// Bisection utilities for monotone functions, shared by every solver in the
// repo. All brackets are refined until the width drops below
// bisect_rel * max(1, |lo| + |hi|) or the iteration cap hits.

inline double bisect_width_tol(double lo, double hi) {
    return tol::bisect_rel * std::fmax(1.0, std::fabs(lo) + std::fabs(hi));
}

// f nonincreasing. Returns sup{t : f(t) >= 0} given f(lo) >= 0 > f(hi).
inline double shrink_upper_edge(const std::function<double(double)>& f, double lo, double hi) {
    for (int it = 0; it < tol::max_bisect_iter && hi - lo > bisect_width_tol(lo, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// f nonincreasing. Returns inf{t : f(t) <= 0} given f(lo) > 0 >= f(hi).
inline double shrink_lower_edge(const std::function<double(double)>& f, double lo, double hi) {
    for (int it = 0; it < tol::max_bisect_iter && hi - lo > bisect_width_tol(lo, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct ZeroSet {
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    bool found = false;

    double midpoint() const {
        if (std::isinf(lo) && std::isinf(hi)) return 0.0;
        if (std::isinf(lo)) return lo;
        if (std::isinf(hi)) return hi;
        return 0.5 * (lo + hi);
    }
};

// Zero set [lo, hi] of a nonincreasing f, located by expanding a bracket
// around `center` (doubling the radius up to the cap) and bisecting both
// edges. If f never changes sign the corresponding edge is +-infinity.
ZeroSet find_zero_set(const std::function<double(double)>& f, double center, double radius0);

}  // namespace robustbp
