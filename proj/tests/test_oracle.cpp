#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robustbp/distributions.hpp"
#include "robustbp/oracle.hpp"
#include "robustbp/rng.hpp"

using namespace robustbp;

namespace {

Sample normal_sample(std::uint64_t seed, int n) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.normal();
    return Sample(xs);
}

}  // namespace

TEST_CASE("oracle value is monotone in m and in candidate enrichment") {
    auto h = ScoreFamily::huber(1.345);
    OracleTarget loc;
    for (std::uint64_t seed : {3u, 17u, 29u}) {
        Sample s = normal_sample(seed, 7);
        OracleConfig cfg;
        double prev = 0.0;
        for (int m = 1; m <= 3; ++m) {
            const double v = brute_force_sensitivity(s, loc, h, std::nullopt, m, Side::plus, cfg);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
        OracleConfig rich = cfg;
        rich.extra_candidates = {0.123, -4.5, 2.75};
        const double base = brute_force_sensitivity(s, loc, h, std::nullopt, 2, Side::plus, cfg);
        const double more = brute_force_sensitivity(s, loc, h, std::nullopt, 2, Side::plus, rich);
        CHECK(more >= base - 1e-12);
    }
}

TEST_CASE("oracle refuses oversized instances; m=0 gives zero") {
    auto h = ScoreFamily::huber(1.345);
    OracleTarget loc;
    OracleConfig cfg;
    cfg.max_n = 6;
    Sample big = normal_sample(1, 9);
    CHECK_THROWS_AS(brute_force_sensitivity(big, loc, h, std::nullopt, 1, Side::plus, cfg),
                    std::domain_error);
    Sample ok = normal_sample(1, 5);
    CHECK(brute_force_sensitivity(ok, loc, h, std::nullopt, 0, Side::plus, cfg) == 0.0);
}

TEST_CASE("huge fixed-sigma acceptance flips only at complete breakdown") {
    auto h = ScoreFamily::huber(1.345);
    Sample s = normal_sample(8, 6);
    TestSpec spec;
    spec.kind = TestKind::fixed_sigma_wald;
    spec.alpha = 0.05;
    spec.sigma0 = 1e6;  // bounded psi shifts cannot reject below half contamination
    OracleConfig cfg;
    cfg.max_n = 6;
    CHECK(run_test(s, h, spec).decision == 0);
    // below half contamination the sensitivity is finite and tiny vs sigma0
    const double theta = solve_location(s, h).theta_hat;
    for (int m = 1; m <= 2; ++m)
        CHECK(location_sensitivity_side(s, h, theta, m, Side::plus) < 100.0);
    // at m = n/2 the location zero set is unbounded: every interval test flips
    OracleBp o = brute_force_test_bp(s, h, spec, cfg);
    CHECK(o.flipped);
    CHECK(o.k == 3);
    TestAudit a = test_bp_bounds(s, h, spec);
    CHECK(a.accept_bp.lower_k == 3);
    CHECK(a.accept_bp.upper_k == 3);
}

TEST_CASE("fuzz: random monotone tabulated scores agree with the oracle") {
    OracleTarget loc;
    OracleConfig cfg;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Rng rng(seed * 1009);
        // random odd nondecreasing score saturating at |t| = 6, with a flat
        // tail out to 2^16 so solver bracket expansion never leaves the grid
        const int half = 12;
        std::vector<double> inc(half);
        double tot = 0.0;
        for (auto& d : inc) {
            d = rng.uniform();
            tot += d;
        }
        double acc = 0.0;
        std::vector<double> pos_t, pos_v;
        for (int k = 0; k < half; ++k) {
            acc += inc[k] / tot;
            pos_t.push_back(6.0 * double(k + 1) / half);
            pos_v.push_back(acc);
        }
        pos_t.push_back(65536.0);
        pos_v.push_back(pos_v.back());
        std::vector<double> ts = {0.0}, vs = {0.0};
        for (std::size_t k = 0; k < pos_t.size(); ++k) {
            ts.push_back(pos_t[k]);
            vs.push_back(pos_v[k]);
        }
        for (std::size_t k = 0; k < pos_t.size(); ++k) {
            ts.insert(ts.begin(), -pos_t[k]);
            vs.insert(vs.begin(), -pos_v[k]);
        }
        auto tab = ScoreFamily::tabulated(ts, vs);

        const int n = 5;
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.normal();
        Sample s(xs);
        const double theta = solve_location(s, tab).theta_hat;
        for (int m = 1; m <= 2; ++m) {
            for (Side side : {Side::plus, Side::minus}) {
                const double closed = location_sensitivity_side(s, tab, theta, m, side);
                const double oracle =
                    brute_force_sensitivity(s, loc, tab, std::nullopt, m, side, cfg);
                if (std::isinf(closed))
                    CHECK(std::isinf(oracle));
                else
                    CHECK(closed == doctest::Approx(oracle).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("delta-scaled Huber convention: SE bounds stay valid") {
    auto hd = ScoreFamily::huber(1.345, DerivConvention::delta_scaled);
    OracleConfig cfg;
    cfg.assign = OracleConfig::Assign::full;
    cfg.refine = true;
    OracleTarget se;
    se.kind = OracleTarget::Kind::se_plugin;
    for (std::uint64_t seed : {5u, 11u}) {
        Sample s = normal_sample(seed, 5);
        for (Side side : {Side::plus, Side::minus}) {
            const double ub = se_plugin_sensitivity_upper_side(s, hd, 1, side);
            const double oracle = brute_force_sensitivity(s, se, hd, std::nullopt, 1, side, cfg);
            CHECK(oracle <= ub + 1e-7);
        }
    }
}
