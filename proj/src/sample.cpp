#include "robustbp/sample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "robustbp/tolerances.hpp"

namespace robustbp {

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("Sample: empty dataset");
    for (double v : values_)
        if (std::isnan(v)) throw std::invalid_argument("Sample: NaN value");
    sorted_ = values_;
    std::sort(sorted_.begin(), sorted_.end());
}

double Sample::median() const {
    const std::size_t n = sorted_.size();
    if (n % 2 == 1) return sorted_[n / 2];
    return 0.5 * (sorted_[n / 2 - 1] + sorted_[n / 2]);
}

double Sample::finite_spread() const {
    double lo = 0, hi = 0;
    bool any = false;
    for (double v : sorted_) {
        if (!std::isfinite(v)) continue;
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            hi = v;
        }
    }
    return any ? hi - lo : 0.0;
}

double Sample::finite_center() const {
    for (double v : sorted_)
        if (std::isfinite(v)) {
            // median of the finite part
            std::vector<double> fin;
            for (double w : sorted_)
                if (std::isfinite(w)) fin.push_back(w);
            const std::size_t m = fin.size();
            return m % 2 == 1 ? fin[m / 2] : 0.5 * (fin[m / 2 - 1] + fin[m / 2]);
        }
    return 0.0;
}

Sample Sample::shifted(double c) const {
    std::vector<double> v = values_;
    for (double& x : v) x += c;
    return Sample(std::move(v));
}

Sample Sample::scaled(double c) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= c;
    return Sample(std::move(v));
}

WeightedSample::WeightedSample(std::vector<double> values, std::vector<double> weights) {
    if (values.size() != weights.size() || values.empty())
        throw std::invalid_argument("WeightedSample: need aligned nonempty vectors");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("WeightedSample: negative weight");
        total += w;
    }
    if (std::fabs(total - 1.0) > tol::weight_sum) {
        if (!(total > 0)) throw std::invalid_argument("WeightedSample: zero total weight");
        for (double& w : weights) w /= total;
    }
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    sorted_values_.reserve(values.size());
    weights_.reserve(values.size());
    for (std::size_t i : idx) {
        sorted_values_.push_back(values[i]);
        weights_.push_back(weights[i]);
    }
    cum_weights_.resize(weights_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        acc += weights_[k];
        cum_weights_[k] = acc;
    }
    cum_weights_.back() = 1.0;
}

WeightedSample WeightedSample::uniform(const Sample& s) {
    std::vector<double> w(s.n(), 1.0 / double(s.n()));
    return WeightedSample(s.values(), std::move(w));
}

}  // namespace robustbp
