#pragma once

#include <cstddef>
#include <vector>

namespace robustbp {

// Univariate dataset kept in input order and sorted. Values may be +-infinity
// (contaminated points "at infinity" are first-class citizens here).
class Sample {
  public:
    Sample() = default;
    explicit Sample(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& sorted() const { return sorted_; }
    std::size_t n() const { return values_.size(); }
    double min() const { return sorted_.front(); }
    double max() const { return sorted_.back(); }
    double median() const;
    // spread of the finite part; 0 if fewer than two finite points
    double finite_spread() const;
    double finite_center() const;

    Sample shifted(double c) const;
    Sample scaled(double c) const;

  private:
    std::vector<double> values_;
    std::vector<double> sorted_;
};

// Sorted values with normalized nonnegative weights and their prefix sums.
class WeightedSample {
  public:
    WeightedSample(std::vector<double> values, std::vector<double> weights);

    const std::vector<double>& sorted_values() const { return sorted_values_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cum_weights() const { return cum_weights_; }
    std::size_t n() const { return sorted_values_.size(); }

    static WeightedSample uniform(const Sample& s);

  private:
    std::vector<double> sorted_values_;
    std::vector<double> weights_;      // aligned with sorted_values_, sums to 1
    std::vector<double> cum_weights_;  // W_k = sum_{i<=k} w_i
};

}  // namespace robustbp
