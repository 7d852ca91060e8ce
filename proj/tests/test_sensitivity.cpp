#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robustbp/distributions.hpp"
#include "robustbp/oracle.hpp"
#include "robustbp/rng.hpp"
#include "robustbp/sensitivity.hpp"

using namespace robustbp;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Sample random_sample(Rng& rng, int n, bool heavy = false) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = heavy ? std::tan(3.0 * (rng.uniform() - 0.5)) : rng.normal();
    return Sample(xs);
}

}  // namespace

TEST_CASE("location sensitivity: pinned examples") {
    auto sgn = ScoreFamily::sign();
    Sample s({-1.0, 0.0, 1.0});
    const double theta = solve_location(s, sgn).theta_hat;
    CHECK(theta == doctest::Approx(0.0));
    CHECK(location_sensitivity_side(s, sgn, theta, 0, Side::plus) == 0.0);
    CHECK(location_sensitivity_side(s, sgn, theta, 1, Side::plus) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // oracle agrees: contaminate the lowest point to +inf, new median = 1
    OracleConfig cfg;
    OracleTarget loc;
    CHECK(brute_force_sensitivity(s, loc, sgn, std::nullopt, 1, Side::plus, cfg) ==
          doctest::Approx(1.0).epsilon(1e-8));

    auto h = ScoreFamily::huber(1.345);
    Sample t({-2.0, -1.0, 0.0, 1.0, 2.0});
    const double th = solve_location(t, h).theta_hat;
    const double eta = location_sensitivity_side(t, h, th, 1, Side::plus);
    CHECK(eta == doctest::Approx(brute_force_sensitivity(t, loc, h, std::nullopt, 1, Side::plus,
                                                         cfg))
                     .epsilon(1e-8));
}

TEST_CASE("location bp: unbounded score breaks with one point") {
    auto id = ScoreFamily::identity();
    Sample s({0.5, 1.0, 2.0});
    const double theta = solve_location(s, id).theta_hat;
    for (double eta : {0.1, 5.0, 1000.0}) {
        BreakdownResult r = location_bp(s, id, theta, eta, Side::plus);
        CHECK(r.k == 1);
        CHECK(location_sensitivity_side(s, id, theta, 1, Side::plus) == kInf);
    }
}

TEST_CASE("location: oracle equivalence on random small instances") {
    Rng rng(42);
    OracleConfig cfg;
    OracleTarget loc;
    int checked = 0;
    for (int rep = 0; rep < 40; ++rep) {
        const int n = 3 + int(rng.next_u64() % 6);  // 3..8
        Sample s = random_sample(rng, n, rep % 3 == 2);
        const ScoreFamily score = rep % 3 == 0   ? ScoreFamily::huber(1.345)
                                  : rep % 3 == 1 ? ScoreFamily::logcosh(1.2047)
                                                 : ScoreFamily::sign();
        const double theta = solve_location(s, score).theta_hat;
        for (int m = 1; m <= n / 2; ++m) {
            for (Side side : {Side::plus, Side::minus}) {
                const double closed = location_sensitivity_side(s, score, theta, m, side);
                const double oracle =
                    brute_force_sensitivity(s, loc, score, std::nullopt, m, side, cfg);
                if (std::isinf(closed)) {
                    CHECK(std::isinf(oracle));
                } else {
                    CHECK(closed == doctest::Approx(oracle).epsilon(1e-8));
                }
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("location: round trip, monotonicity, translation invariance") {
    Rng rng(7);
    auto h = ScoreFamily::huber(1.345);
    Sample s = random_sample(rng, 12);
    const double theta = solve_location(s, h).theta_hat;
    double prev = 0.0;
    for (int m = 1; m <= 6; ++m) {
        const double eta = location_sensitivity_side(s, h, theta, m, Side::plus);
        CHECK(eta >= prev - 1e-12);
        if (std::isfinite(eta) && m >= 2) {
            const double prev_eta = location_sensitivity_side(s, h, theta, m - 1, Side::plus);
            if (eta > prev_eta + 1e-9) {
                const double mid = 0.5 * (prev_eta + eta);
                BreakdownResult r = location_bp(s, h, theta, mid, Side::plus);
                CHECK(r.k == m);
            }
        }
        prev = eta;
    }
    // translation invariance
    Sample t = s.shifted(13.7);
    const double theta_t = solve_location(t, h).theta_hat;
    for (int m : {1, 3, 5})
        for (Side side : {Side::plus, Side::minus})
            CHECK(location_sensitivity_side(s, h, theta, m, side) ==
                  doctest::Approx(location_sensitivity_side(t, h, theta_t, m, side))
                      .epsilon(1e-8));
}

TEST_CASE("scale: pinned behavior and oracle equivalence") {
    auto model = PopulationModel::normal();
    auto h = ScoreFamily::huber(1.345);
    auto chi = make_scale_family(h, model);
    Rng rng(4242);
    OracleConfig cfg;
    OracleTarget sc;
    sc.kind = OracleTarget::Kind::scale;

    // eta -> 0+ gives bp = 1/n
    {
        Sample s = random_sample(rng, 6);
        const double sigma = *solve_scale(s, chi).sigma_hat;
        BreakdownResult r = scale_bp(s, chi, sigma, 1e-9, Side::two_sided);
        CHECK(r.k == 1);
    }
    for (int rep = 0; rep < 25; ++rep) {
        const int n = 4 + int(rng.next_u64() % 5);  // 4..8
        Sample s = random_sample(rng, n);
        const ScoreFamily score = rep % 2 ? ScoreFamily::logcosh(1.2047) : h;
        auto chif = make_scale_family(score, model);
        const double sigma = *solve_scale(s, chif).sigma_hat;
        for (int m = 1; m <= n / 2; ++m) {
            for (Side side : {Side::plus, Side::minus}) {
                const double closed = scale_sensitivity_side(s, chif, sigma, m, side);
                const double oracle =
                    brute_force_sensitivity(s, sc, score, chif, m, side, cfg);
                if (std::isinf(closed))
                    CHECK(std::isinf(oracle));
                else
                    CHECK(closed == doctest::Approx(oracle).epsilon(1e-7));
                if (side == Side::minus) CHECK(closed <= sigma + 1e-12);
            }
        }
        // scale equivariance
        const double c = 2.5;
        const double s2 = *solve_scale(s.scaled(c), chif).sigma_hat;
        CHECK(scale_sensitivity_side(s.scaled(c), chif, s2, 1, Side::plus) ==
              doctest::Approx(c * scale_sensitivity_side(s, chif, sigma, 1, Side::plus))
                  .epsilon(1e-7));
    }
}

TEST_CASE("two-stage: bracket sandwich around the oracle") {
    auto model = PopulationModel::normal();
    auto h = ScoreFamily::huber(1.345);
    auto chi = make_scale_family(h, model);
    Rng rng(9001);
    OracleConfig cfg;
    cfg.assign = OracleConfig::Assign::full;
    cfg.refine = true;
    OracleTarget ts;
    ts.kind = OracleTarget::Kind::two_stage;

    for (int rep = 0; rep < 12; ++rep) {
        const int n = 5 + int(rng.next_u64() % 3);  // 5..7
        Sample s = random_sample(rng, n);
        for (int m = 1; m <= 2; ++m) {
            auto [lo, hi] = two_stage_sensitivity_bounds(s, h, chi, m);
            for (Side side : {Side::plus, Side::minus}) {
                const double l = side == Side::plus ? lo.eta_plus : lo.eta_minus;
                const double u = side == Side::plus ? hi.eta_plus : hi.eta_minus;
                CHECK(l <= u + 1e-9);
                const double oracle = brute_force_sensitivity(s, ts, h, chi, m, side, cfg);
                CHECK(oracle >= l - 1e-7);
                CHECK(oracle <= u + 1e-7);
            }
        }
        // m = 0 gives (0, 0)
        auto [z0, z1] = two_stage_sensitivity_bounds(s, h, chi, 0);
        CHECK(z0.eta_plus == 0.0);
        CHECK(z1.eta_plus == 0.0);
    }
}

TEST_CASE("two-stage bp bounds bracket and order") {
    auto model = PopulationModel::normal();
    auto h = ScoreFamily::huber(1.345);
    auto chi = make_scale_family(h, model);
    Rng rng(555);
    Sample s = random_sample(rng, 9);
    for (double eta : {0.2, 0.6, 1.4}) {
        auto [lo, hi] = two_stage_bp_bounds(s, h, chi, eta, Side::two_sided);
        CHECK(lo.k <= hi.k);
        CHECK(lo.k >= 1);
    }
    // eta -> 0+ collapses to 1/n on both ends
    auto [lo, hi] = two_stage_bp_bounds(s, h, chi, 1e-10, Side::two_sided);
    CHECK(lo.k == 1);
    CHECK(hi.k == 1);
}

TEST_CASE("restricted SE sensitivity: exact closed form vs oracle") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(31);
    OracleConfig cfg;
    cfg.assign = OracleConfig::Assign::full;
    cfg.refine = true;
    OracleTarget se;
    se.kind = OracleTarget::Kind::se_restricted;
    se.theta0 = 0.0;

    CHECK(se_restricted_sensitivity_side(Sample({1.0, 2.0}), h, 0.0, 0, Side::plus) == 0.0);

    for (int rep = 0; rep < 12; ++rep) {
        const int n = 4 + int(rng.next_u64() % 4);  // 4..7
        Sample s = random_sample(rng, n);
        try {
            plugin_se(s, h, 0.0);
        } catch (const std::domain_error&) {
            continue;  // precondition of the op: nondegenerate base SE
        }
        for (int m = 1; m <= 2; ++m) {
            for (Side side : {Side::plus, Side::minus}) {
                const double closed = se_restricted_sensitivity_side(s, h, 0.0, m, side);
                const double oracle = brute_force_sensitivity(s, se, h, std::nullopt, m, side, cfg);
                if (std::isinf(closed))
                    CHECK(std::isinf(oracle));
                else
                    CHECK(closed == doctest::Approx(oracle).epsilon(1e-6));
            }
        }
    }
    // m = n empties the kept numerator: the guard returns se0 - 0 exactly
    Sample far({-9.0, -0.5, 0.5, 9.0});
    const double se0 = plugin_se(far, h, 0.0);
    CHECK(se_restricted_sensitivity_side(far, h, 0.0, 4, Side::minus) ==
          doctest::Approx(se0).epsilon(1e-9));
}

TEST_CASE("plug-in SE bounds sandwich the oracle") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(77);
    OracleConfig cfg;
    cfg.assign = OracleConfig::Assign::full;
    cfg.refine = true;
    OracleTarget se;
    se.kind = OracleTarget::Kind::se_plugin;

    for (int rep = 0; rep < 10; ++rep) {
        const int n = 5 + int(rng.next_u64() % 2);  // 5..6
        Sample s = random_sample(rng, n);
        for (int m = 1; m <= 2; ++m) {
            for (Side side : {Side::plus, Side::minus}) {
                const double ub = se_plugin_sensitivity_upper_side(s, h, m, side);
                const double ub_env = se_plugin_sensitivity_upper_side(s, h, m, side, true);
                const double lb = se_plugin_sensitivity_lower_side(s, h, m, side);
                const double oracle = brute_force_sensitivity(s, se, h, std::nullopt, m, side, cfg);
                CHECK(ub_env <= ub + 1e-9);
                CHECK(oracle <= ub + 1e-7);
                CHECK(oracle <= ub_env + 1e-7);
                CHECK(oracle >= lb - 1e-7);
            }
        }
        CHECK(se_plugin_sensitivity_upper_side(s, h, 0, Side::plus) == 0.0);
    }
}

TEST_CASE("weighted: reductions and hand computations") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(8);
    Sample s = random_sample(rng, 9);
    const double theta = solve_location(s, h).theta_hat;
    WeightedSample uw = WeightedSample::uniform(s);
    for (int m : {1, 2, 4}) {
        for (Side side : {Side::plus, Side::minus}) {
            CHECK(weighted_location_sensitivity_side(uw, h, theta, m, side) ==
                  doctest::Approx(location_sensitivity_side(s, h, theta, m, side)).epsilon(1e-9));
        }
    }
    for (double eta : {0.2, 0.8}) {
        BreakdownResult a = weighted_location_bp(uw, h, theta, eta, Side::plus);
        BreakdownResult b = location_bp(s, h, theta, eta, Side::plus);
        CHECK(a.k == b.k);
    }
    CHECK(weighted_location_sensitivity_side(uw, h, theta, 0, Side::plus) == 0.0);

    // concentrated mass: hand computation with n=3, weights (0.9, 0.05, 0.05)
    {
        WeightedSample ws({0.0, 1.0, 2.0}, {0.9, 0.05, 0.05});
        const double tb = solve_location_weighted(ws, h).theta_hat;
        // m/n = 1/3 of mass moved: the boundary index for the plus side is the
        // heavy first point (W_1 = 0.9 >= 1/3)
        const double eta1 = weighted_location_sensitivity_side(ws, h, tb, 1, Side::plus);
        // direct evaluation of the weighted trimmed condition on a fine grid
        double best = 0.0;
        const double mn = 1.0 / 3.0;
        for (int k = 0; k <= 400000; ++k) {
            const double eta = 8.0 * k / 400000.0;
            const double t1 = (0.9 - mn) * h.evaluate(0.0 - tb - eta);
            const double t2 = 0.05 * h.evaluate(1.0 - tb - eta);
            const double t3 = 0.05 * h.evaluate(2.0 - tb - eta);
            if (t1 + t2 + t3 + mn * h.psi_max() >= 0.0) best = eta;
        }
        CHECK(eta1 == doctest::Approx(best).epsilon(1e-4));
    }

    // crafted weights, n=5, m=1: fine-grid direct evaluation of the condition
    {
        std::vector<double> vals = {-1.4, -0.3, 0.2, 0.9, 2.2};
        std::vector<double> w = {0.3, 0.1, 0.25, 0.15, 0.2};
        WeightedSample ws(vals, w);
        const double tb = solve_location_weighted(ws, h).theta_hat;
        const double eta1 = weighted_location_sensitivity_side(ws, h, tb, 1, Side::plus);
        const double mn = 0.2;
        // i_m: W_0 = 0.3 >= 0.2 -> boundary index 0, partial mass 0.1 stays
        double best = 0.0;
        for (int k = 0; k <= 400000; ++k) {
            const double eta = 8.0 * k / 400000.0;
            double sum = (0.3 - mn) * h.evaluate(vals[0] - tb - eta);
            for (int i = 1; i < 5; ++i) sum += w[i] * h.evaluate(vals[i] - tb - eta);
            if (sum + mn * h.psi_max() >= 0.0) best = eta;
        }
        CHECK(eta1 == doctest::Approx(best).epsilon(1e-4));
    }
}

TEST_CASE("weighted bp stays near the unweighted value under Exp weights") {
    auto h = ScoreFamily::huber(1.345);
    int close = 0, total = 0;
    for (int seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        std::vector<double> xs(20), w(20);
        for (auto& x : xs) x = rng.normal();
        for (auto& v : w) v = rng.exponential();
        Sample s(xs);
        WeightedSample ws(xs, w);
        const double theta = solve_location(s, h).theta_hat;
        const double theta_b = solve_location_weighted(ws, h).theta_hat;
        BreakdownResult a = location_bp(s, h, theta, 0.5, Side::plus);
        BreakdownResult b = weighted_location_bp(ws, h, theta_b, 0.5, Side::plus);
        total++;
        if (std::abs(a.k - b.k) <= 2) close++;
    }
    CHECK(close >= 8);  // Monte Carlo sanity sweep, not an exact identity
}

TEST_CASE("sensitivity curve composes pointwise") {
    auto model = PopulationModel::normal();
    auto h = ScoreFamily::huber(1.345);
    auto chi = make_scale_family(h, model);
    Rng rng(3);
    Sample s = random_sample(rng, 10);
    EstimatorSpec spec;
    spec.kind = EstimatorSpec::Kind::location;
    auto curve = sensitivity_curve(s, h, chi, spec, {0, 1, 2, 3});
    CHECK(curve.size() == 4);
    CHECK(curve[0].lower.eta_two_sided == 0.0);
    const double theta = solve_location(s, h).theta_hat;
    for (int i = 1; i < 4; ++i) {
        CHECK(curve[i].lower.eta_plus ==
              doctest::Approx(location_sensitivity_side(s, h, theta, i, Side::plus)));
        CHECK(curve[i].lower.eta_two_sided >= curve[i - 1].lower.eta_two_sided - 1e-12);
        CHECK(curve[i].exact);
    }
    spec.kind = EstimatorSpec::Kind::two_stage;
    auto tcurve = sensitivity_curve(s, h, chi, spec, {1, 2});
    for (const auto& e : tcurve) {
        CHECK_FALSE(e.exact);
        CHECK(e.lower.eta_plus <= e.upper.eta_plus + 1e-9);
        CHECK(e.lower.eta_minus <= e.upper.eta_minus + 1e-9);
    }
}

TEST_CASE("two-stage qualitative orderings at protocol scale") {
    auto model = PopulationModel::normal();
    auto h = ScoreFamily::huber(1.345);
    auto chi = make_scale_family(h, model);
    const int n = 1000;
    // brackets nonempty and nondecreasing in m on one N(0,1) draw
    {
        Rng rng(2024);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.normal();
        Sample s(xs);
        double prev_lo = 0.0, prev_hi = 0.0;
        for (int m = 10; m <= 150; m += 20) {
            auto [lo, hi] = two_stage_sensitivity_bounds(s, h, chi, m);
            CHECK(lo.eta_plus <= hi.eta_plus + 1e-9);
            CHECK(lo.eta_plus >= prev_lo - 1e-9);
            CHECK(hi.eta_plus >= prev_hi - 1e-9);
            prev_lo = lo.eta_plus;
            prev_hi = hi.eta_plus;
        }
    }
    // heavier tails break earlier: mean Cauchy bp <= mean normal bp at matched eta
    {
        const double eta = 0.3;
        double bp_normal = 0, bp_cauchy = 0;
        const int reps = 5;
        for (int r = 0; r < reps; ++r) {
            Rng rng(5000 + r);
            std::vector<double> xn(n), xc(n);
            for (auto& x : xn) x = rng.normal();
            auto cauchy = PopulationModel::cauchy();
            for (auto& x : xc) x = cauchy.sample(rng);
            auto [ln, hn] = two_stage_bp_bounds(Sample(xn), h, chi, eta, Side::two_sided);
            auto [lc, hc] = two_stage_bp_bounds(Sample(xc), h, chi, eta, Side::two_sided);
            bp_normal += hn.bp() / reps;
            bp_cauchy += hc.bp() / reps;
        }
        CHECK(bp_cauchy <= bp_normal + 1e-9);
    }
}
