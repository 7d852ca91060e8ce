#include "robustbp/roots.hpp"

namespace robustbp {

// f nonincreasing; zero set is an interval [L, U] with
// U = sup{t: f(t) >= 0}, L = inf{t: f(t) <= 0}.
ZeroSet find_zero_set(const std::function<double(double)>& f, double center, double radius0) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    ZeroSet zs;
    double r = radius0 > 0 ? radius0 : 1.0;

    double lo = center - r, hi = center + r;
    double flo = f(lo), fhi = f(hi);
    for (int k = 0; k < tol::max_bracket_doublings && flo < 0.0; ++k) {
        r *= 2.0;
        lo = center - r;
        flo = f(lo);
    }
    for (int k = 0; k < tol::max_bracket_doublings && fhi > 0.0; ++k) {
        r *= 2.0;
        hi = center + r;
        fhi = f(hi);
    }
    if (flo < 0.0) {  // negative everywhere reachable: root escaped to -inf
        zs.lo = zs.hi = -kInf;
        return zs;
    }
    if (fhi > 0.0) {  // positive everywhere reachable: root escaped to +inf
        zs.lo = zs.hi = kInf;
        return zs;
    }
    zs.found = true;

    // upper edge
    if (fhi == 0.0) {
        double h2 = hi;
        int k = 0;
        for (; k < tol::max_bracket_doublings && f(h2) == 0.0; ++k) h2 = center + (h2 - center) * 2.0 + 1.0;
        if (k == tol::max_bracket_doublings)
            zs.hi = kInf;
        else
            zs.hi = shrink_upper_edge(f, hi, h2);
    } else {
        zs.hi = shrink_upper_edge(f, lo, hi);
    }

    // lower edge
    if (flo == 0.0) {
        double l2 = lo;
        int k = 0;
        for (; k < tol::max_bracket_doublings && f(l2) == 0.0; ++k) l2 = center - (center - l2) * 2.0 - 1.0;
        if (k == tol::max_bracket_doublings)
            zs.lo = -kInf;
        else
            zs.lo = shrink_lower_edge(f, l2, lo);
    } else {
        zs.lo = shrink_lower_edge(f, lo, hi);
    }
    return zs;
}

}  // namespace robustbp
