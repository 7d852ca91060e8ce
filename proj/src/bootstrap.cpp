#include "robustbp/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "robustbp/asymptotics.hpp"
#include "robustbp/parallel.hpp"
#include "robustbp/stats.hpp"

namespace robustbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void finish_summary(BootstrapSummary& s, const std::vector<double>& raw,
                    const BootstrapConfig& config) {
    s.method = config.method;
    s.draws.reserve(raw.size());
    for (double d : raw) {
        if (std::isfinite(d))
            s.draws.push_back(d);
        else
            ++s.failures;
    }
    if (s.failures > 0 && 100 * s.failures > config.replicates)
        throw std::runtime_error("bootstrap: more than 1% of replicates failed");
    std::vector<double> sorted = s.draws;
    std::sort(sorted.begin(), sorted.end());
    for (double level : config.ci_levels) {
        const double alpha = 1.0 - level;
        const double qlo = quantile_sorted(sorted, alpha / 2.0);
        const double qhi = quantile_sorted(sorted, 1.0 - alpha / 2.0);
        if (config.method == CiMethod::basic)
            s.ci[level] = {2.0 * s.point - qhi, 2.0 * s.point - qlo};
        else
            s.ci[level] = {qlo, qhi};
    }
}

}  // namespace

std::vector<double> draw_weights(std::size_t n, const BootstrapConfig& config,
                                 std::uint64_t replicate_index) {
    if (n == 0) throw std::invalid_argument("draw_weights: n must be positive");
    Rng rng = Rng::stream(config.seed, replicate_index);
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = config.law == WeightLaw::exponential_unit ? rng.exponential()
                                                         : config.custom_law(rng);
        if (!(w[i] >= 0.0)) throw std::runtime_error("draw_weights: negative weight drawn");
        total += w[i];
    }
    if (!(total > 0.0)) throw std::runtime_error("draw_weights: all-zero weights");
    for (double& v : w) v /= total;
    return w;
}

BootstrapSummary bootstrap_sensitivity(const Sample& sample, const ScoreFamily& score, int m,
                                       Side side, const BootstrapConfig& config) {
    if (m < 0 || m > int(sample.n()) / 2)
        throw std::domain_error("bootstrap_sensitivity: need 0 <= m <= n/2");
    BootstrapSummary s;
    {
        const WeightedSample uw = WeightedSample::uniform(sample);
        const double theta = solve_location(sample, score).theta_hat;
        s.point = weighted_location_sensitivity_side(uw, score, theta, m, side);
    }
    std::vector<double> raw(config.replicates, kNaN);
    parallel_for(config.replicates, config.threads, [&](int b) {
        try {
            const std::vector<double> w = draw_weights(sample.n(), config, std::uint64_t(b));
            WeightedSample ws(sample.values(), w);
            const FitResult fit = solve_location_weighted(ws, score);
            if (fit.breakdown) return;
            raw[b] = weighted_location_sensitivity_side(ws, score, fit.theta_hat, m, side);
        } catch (const std::exception&) {
            // leave NaN: counted as a failure
        }
    });
    finish_summary(s, raw, config);
    return s;
}

BootstrapSummary bootstrap_bp(const Sample& sample, const ScoreFamily& score, double eta,
                              Side side, const BootstrapConfig& config) {
    if (!(eta > 0.0)) throw std::domain_error("bootstrap_bp: eta must be positive");
    BootstrapSummary s;
    {
        const WeightedSample uw = WeightedSample::uniform(sample);
        const double theta = solve_location(sample, score).theta_hat;
        s.point = weighted_location_bp(uw, score, theta, eta, side).bp();
    }
    std::vector<double> raw(config.replicates, kNaN);
    parallel_for(config.replicates, config.threads, [&](int b) {
        try {
            const std::vector<double> w = draw_weights(sample.n(), config, std::uint64_t(b));
            WeightedSample ws(sample.values(), w);
            const FitResult fit = solve_location_weighted(ws, score);
            if (fit.breakdown) return;
            const BreakdownResult r = weighted_location_bp(ws, score, fit.theta_hat, eta, side);
            if (r.attained) raw[b] = r.bp();
        } catch (const std::exception&) {
        }
    });
    finish_summary(s, raw, config);
    return s;
}

PitResult pit_uniformity(const PopulationModel& model, const ScoreFamily& score, double eps,
                         int n, int outer_reps, int inner_reps, Side side,
                         const BootstrapConfig& config) {
    if (n < 2 || outer_reps < 2 || inner_reps < 2)
        throw std::domain_error("pit_uniformity: degenerate replication counts");
    const double eta_pop = population_sensitivity(model, score, eps, side);
    const int m = int(std::ceil(eps * n));
    const double sqn = std::sqrt(double(n));

    PitResult out;
    out.u.assign(outer_reps, kNaN);
    parallel_for(outer_reps, config.threads, [&](int j) {
        Rng sample_rng = Rng::stream(config.seed, 2 * std::uint64_t(j));
        Rng tie_rng = Rng::stream(config.seed, 2 * std::uint64_t(j) + 1);
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = model.sample(sample_rng);
        Sample sample(xs);
        const double theta = solve_location(sample, score).theta_hat;
        const WeightedSample uw = WeightedSample::uniform(sample);
        const double eta_hat = weighted_location_sensitivity_side(uw, score, theta, m, side);
        if (!std::isfinite(eta_hat)) return;
        const double t_obs = sqn * (eta_hat - eta_pop);

        BootstrapConfig inner = config;
        inner.seed = splitmix64(config.seed ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t(j) + 1)));
        int rank = 0, valid = 0;
        for (int b = 0; b < inner_reps; ++b) {
            try {
                const std::vector<double> w = draw_weights(sample.n(), inner, std::uint64_t(b));
                WeightedSample ws(sample.values(), w);
                const FitResult fit = solve_location_weighted(ws, score);
                if (fit.breakdown) continue;
                const double eta_b =
                    weighted_location_sensitivity_side(ws, score, fit.theta_hat, m, side);
                if (!std::isfinite(eta_b)) continue;
                ++valid;
                if (sqn * (eta_b - eta_hat) <= t_obs) ++rank;
            } catch (const std::exception&) {
            }
        }
        if (valid < inner_reps / 2) return;
        out.u[j] = (double(rank) + tie_rng.uniform()) / double(valid + 1);
    });
    std::vector<double> u;
    u.reserve(out.u.size());
    for (double v : out.u)
        if (std::isfinite(v)) u.push_back(v);
    if (u.size() < std::size_t(outer_reps) / 2)
        throw std::runtime_error("pit_uniformity: too many failed replications");
    out.u = u;
    out.ks_stat = ks_statistic_uniform(u);
    out.p_value = ks_pvalue(out.ks_stat, int(u.size()));
    return out;
}

}  // namespace robustbp
