#pragma once

#include <functional>
#include <string>

#include "robustbp/rng.hpp"

namespace robustbp {

double normal_cdf(double x);
double normal_pdf(double x);
// Inverse standard normal CDF (Wichura AS241), |rel err| ~ 1e-15.
double normal_quantile(double p);

enum class ModelKind { normal, uniform, cauchy, custom };

// A univariate distribution used for population targets: cdf/density/quantile
// plus inverse-CDF sampling. Expectations are integrated on the quantile-
// transformed domain, so a quantile function is mandatory.
struct PopulationModel {
    ModelKind kind = ModelKind::normal;
    double loc = 0.0;    // mean / left endpoint / location
    double scale = 1.0;  // sd / width / scale

    std::function<double(double)> custom_cdf;
    std::function<double(double)> custom_pdf;
    std::function<double(double)> custom_quantile;
    std::string label;

    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double p) const;  // p in [0,1]; 0/1 may map to +-inf
    double sample(Rng& rng) const { return quantile_clamped(rng.uniform_pos()); }

    std::string name() const;

    static PopulationModel normal(double mean = 0.0, double sd = 1.0);
    static PopulationModel uniform(double a = 0.0, double b = 1.0);
    static PopulationModel cauchy(double x0 = 0.0, double gamma = 1.0);
    static PopulationModel custom(std::function<double(double)> cdf,
                                  std::function<double(double)> pdf,
                                  std::function<double(double)> quantile,
                                  std::string label = "custom");

  private:
    double quantile_clamped(double p) const;
};

PopulationModel make_model_by_name(const std::string& name);

}  // namespace robustbp
