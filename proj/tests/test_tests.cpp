#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robustbp/distributions.hpp"
#include "robustbp/oracle.hpp"
#include "robustbp/rng.hpp"
#include "robustbp/tests.hpp"

using namespace robustbp;

namespace {

Sample random_sample(Rng& rng, int n, double shift = 0.0) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.normal() + shift;
    return Sample(xs);
}

}  // namespace

TEST_CASE("run_test basics") {
    auto h = ScoreFamily::huber(1.345);
    TestSpec spec;
    spec.kind = TestKind::wald;
    spec.alpha = 0.05;

    // theta_hat == 0: interval contains 0, decision 0
    Sample sym({-1.0, -0.5, 0.5, 1.0});
    CHECK(run_test(sym, h, spec).decision == 0);

    // score test with sum psi = 0 exactly
    TestSpec sc;
    sc.kind = TestKind::score_test;
    CHECK(run_test(sym, h, sc).decision == 0);
    CHECK(run_test(sym, h, sc).estimate == doctest::Approx(0.0));

    // strong signal rejects with overwhelming frequency
    int rejected = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Sample s = random_sample(rng, 500, 2.0);
        rejected += run_test(s, h, spec).decision;
    }
    CHECK(rejected >= 99);
}

TEST_CASE("fixed-sigma bracket is exact and matches the stated formula") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(12);
    for (int rep = 0; rep < 10; ++rep) {
        Sample s = random_sample(rng, 25, 0.8);
        TestSpec spec;
        spec.kind = TestKind::fixed_sigma_wald;
        spec.sigma0 = 1.0 / std::sqrt(25.0);
        TestAudit a = test_bp_bounds(s, h, spec);
        const auto& br = a.active();
        CHECK(br.exact);
        CHECK(br.lower_k == br.upper_k);
        if (a.run.decision == 1 && a.run.estimate > 0.0) {
            const double L = a.run.lower;
            const double theta = a.run.estimate;
            int expect = 0;
            for (int m = 1; m <= 25; ++m)
                if (location_sensitivity_side(s, h, theta, m, Side::minus) >= L) {
                    expect = m;
                    break;
                }
            CHECK(br.lower_k == expect);
        }
    }
}

TEST_CASE("wald bracket: validity and oracle containment on small instances") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(314);
    OracleConfig cfg;
    cfg.max_n = 6;
    int done = 0;
    for (int rep = 0; rep < 40 && done < 25; ++rep) {
        Sample s = random_sample(rng, 6, rng.uniform() * 2.0 - 0.5);
        TestSpec spec;
        spec.kind = rep % 2 ? TestKind::restricted_wald : TestKind::wald;
        spec.alpha = 0.1;
        TestAudit a;
        try {
            a = test_bp_bounds(s, h, spec);
        } catch (const std::exception&) {
            continue;
        }
        const auto& br = a.active();
        CHECK(br.lower_k <= br.upper_k);
        OracleBp o = brute_force_test_bp(s, h, spec, cfg);
        if (!o.flipped) continue;
        CHECK(o.k >= br.lower_k);
        if (br.upper_attained) CHECK(o.k <= br.upper_k);
        ++done;
    }
    CHECK(done >= 15);
}

TEST_CASE("score test: restricted bracket has zero width and matches oracle") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(2718);
    OracleConfig cfg;
    cfg.max_n = 6;
    int done = 0;
    for (int rep = 0; rep < 40 && done < 20; ++rep) {
        Sample s = random_sample(rng, 6, rng.uniform() * 2.0 - 0.5);
        for (TestKind kind : {TestKind::restricted_score, TestKind::score_test}) {
            TestSpec spec;
            spec.kind = kind;
            spec.alpha = 0.1;
            TestAudit a = score_test_bp(s, h, spec);
            const auto& br = a.active();
            CHECK(br.lower_k <= br.upper_k);
            if (kind == TestKind::restricted_score) {
                CHECK(br.exact);
                CHECK(br.lower_k == br.upper_k);
            }
            OracleBp o = brute_force_test_bp(s, h, spec, cfg);
            if (!o.flipped) continue;
            CHECK(o.k >= br.lower_k);
            if (kind == TestKind::restricted_score)
                CHECK(o.k == br.lower_k);
            else if (br.upper_attained)
                CHECK(o.k <= br.upper_k);
            ++done;
        }
    }
    CHECK(done >= 12);
}

TEST_CASE("two-sample: trivial equality case and oracle containment") {
    auto h = ScoreFamily::huber(1.345);
    TestSpec spec;
    spec.kind = TestKind::two_sample_wald;
    spec.alpha = 0.1;

    Sample x({-1.0, 0.2, 0.8, 1.4});
    CHECK(run_test(x, x, h, spec).decision == 0);

    Rng rng(163);
    OracleConfig cfg;
    cfg.max_n = 4;
    int done = 0;
    for (int rep = 0; rep < 30 && done < 12; ++rep) {
        Sample a = random_sample(rng, 4, 0.0);
        Sample b = random_sample(rng, 4, rng.uniform() * 3.0 - 1.0);
        TestAudit audit;
        try {
            audit = two_sample_bp_bounds(a, b, h, spec);
        } catch (const std::exception&) {
            continue;
        }
        const auto& br = audit.active();
        CHECK(br.lower_k <= br.upper_k);
        OracleBp o = brute_force_test_bp(a, b, h, spec, cfg);
        if (!o.flipped) continue;
        CHECK(o.k >= br.lower_k);
        if (br.upper_attained) CHECK(o.k <= br.upper_k);
        ++done;
    }
    CHECK(done >= 8);
}

TEST_CASE("statistic band: attainability and coverage at half contamination") {
    auto h = ScoreFamily::huber(1.345);
    TestSpec spec;
    spec.kind = TestKind::two_sample_wald;
    spec.alpha = 0.05;
    spec.scheme.use_a_grid = true;
    Rng rng(5);
    Sample x = random_sample(rng, 8, 0.0);
    Sample y = random_sample(rng, 8, 0.7);

    StatisticBand b0 = statistic_band(x, y, h, 0, spec);
    CHECK(b0.low == doctest::Approx(b0.high));

    const double stat0 = run_test(x, y, h, spec).statistic;
    for (int m : {1, 2, 4}) {
        StatisticBand b = statistic_band(x, y, h, m, spec);
        CHECK(b.low <= stat0 + 1e-12);
        CHECK(b.high >= stat0 - 1e-12);
        // the low endpoint is achieved by the returned contamination
        RunResult r = run_test(Sample(b.x_low), Sample(b.y_low), h, spec);
        if (std::isinf(b.low))
            CHECK(r.statistic == b.low);
        else
            CHECK(r.statistic == doctest::Approx(b.low).epsilon(1e-9));
        // exhaustive oracle on the extremal statistic at m=1
        if (m == 1) {
            OracleConfig cfg;
            cfg.max_n = 8;
            double worst = stat0;
            // enumerate one replacement in either sample at +-inf targets
            for (int i = 0; i < 8; ++i) {
                for (double c : {-1e12, 1e12}) {
                    std::vector<double> cx = x.values();
                    cx[i] = c;
                    worst = std::fmin(worst, run_test(Sample(cx), y, h, spec).statistic);
                    std::vector<double> cy = y.values();
                    cy[i] = c;
                    worst = std::fmin(worst, run_test(x, Sample(cy), h, spec).statistic);
                }
            }
            CHECK(b.low <= worst + 1e-9);
        }
    }
    // half of the smaller sample: the band must cover both rejection regions
    const int half = 4;
    StatisticBand bh = statistic_band(x, y, h, half, spec);
    const double zc = spec.critical_z();
    CHECK(bh.low <= -zc);
    CHECK(bh.high >= zc);
}

TEST_CASE("two-stage test SE ratio bound") {
    auto model = PopulationModel::normal();
    auto h = ScoreFamily::huber(1.345);
    auto chi = make_scale_family(h, model);
    Rng rng(21);
    OracleConfig cfg;
    cfg.assign = OracleConfig::Assign::full;
    cfg.refine = true;
    cfg.max_n = 6;

    for (int rep = 0; rep < 6; ++rep) {
        Sample s = random_sample(rng, 6);
        CHECK(two_stage_test_se_upper_side(s, h, chi, 0, Side::plus) == 0.0);
        double prev_plus = 0.0;
        for (int m = 1; m <= 3; ++m) {
            SensitivityPoint p = two_stage_test_se_upper(s, h, chi, m);
            CHECK(p.kind == ValueKind::upper_bound);
            CHECK(p.eta_plus >= prev_plus - 1e-9);  // nondecreasing in m
            prev_plus = p.eta_plus;
        }
        // oracle: exhaustive contamination of the ratio part at m=1
        const FitResult fit = solve_two_stage(s, h, chi);
        const double base = plugin_se_ratio(s, h, fit.theta_hat, *fit.sigma_hat);
        double worst_up = 0.0, worst_dn = 0.0;
        for (int i = 0; i < 6; ++i) {
            for (double c : {-1e14, 1e14, 0.0, s.min(), s.max(), 2.0 * s.max()}) {
                std::vector<double> y = s.values();
                y[i] = c;
                try {
                    const FitResult f = solve_two_stage(Sample(y), h, chi);
                    if (f.breakdown) continue;
                    const double r = plugin_se_ratio(Sample(y), h, f.theta_hat, *f.sigma_hat);
                    worst_up = std::fmax(worst_up, r - base);
                    worst_dn = std::fmax(worst_dn, base - r);
                } catch (const std::exception&) {
                }
            }
        }
        SensitivityPoint p1 = two_stage_test_se_upper(s, h, chi, 1);
        CHECK(p1.eta_plus >= worst_up - 1e-7);
        CHECK(p1.eta_minus >= worst_dn - 1e-7);
    }
}

TEST_CASE("one-sided audits") {
    auto h = ScoreFamily::huber(1.345);
    Rng rng(99);
    Sample s = random_sample(rng, 30, 0.5);
    TestSpec spec;
    spec.kind = TestKind::wald;
    spec.alpha = 0.05;
    spec.sided = Sidedness::one_sided_upper;
    TestAudit a = test_bp_bounds(s, h, spec);
    CHECK(a.active().lower_k <= a.active().upper_k);
    // flip the upper-bound contamination through run_test: decision changes
    if (a.run.decision == 1 && a.active().upper_attained) {
        const int m = a.active().upper_k;
        std::vector<double> y = s.sorted();
        for (int i = 30 - m; i < 30; ++i) y[i] = -std::numeric_limits<double>::infinity();
        CHECK(run_test(Sample(y), h, spec).decision == 0);
    }
}
