#include "robustbp/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace robustbp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846264338327950288;
}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Wichura's algered AS241 PPND16.
double normal_quantile(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

double PopulationModel::cdf(double x) const {
    switch (kind) {
        case ModelKind::normal:
            return normal_cdf((x - loc) / scale);
        case ModelKind::uniform: {
            if (x <= loc) return 0.0;
            if (x >= loc + scale) return 1.0;
            return (x - loc) / scale;
        }
        case ModelKind::cauchy:
            return 0.5 + std::atan((x - loc) / scale) / kPi;
        case ModelKind::custom:
            return custom_cdf(x);
    }
    return 0.0;
}

double PopulationModel::pdf(double x) const {
    switch (kind) {
        case ModelKind::normal:
            return normal_pdf((x - loc) / scale) / scale;
        case ModelKind::uniform:
            return (x >= loc && x <= loc + scale) ? 1.0 / scale : 0.0;
        case ModelKind::cauchy: {
            const double z = (x - loc) / scale;
            return 1.0 / (kPi * scale * (1.0 + z * z));
        }
        case ModelKind::custom:
            return custom_pdf(x);
    }
    return 0.0;
}

double PopulationModel::quantile(double p) const {
    if (p < 0.0 || p > 1.0) throw std::domain_error("quantile: p outside [0,1]");
    switch (kind) {
        case ModelKind::normal:
            return loc + scale * normal_quantile(p);
        case ModelKind::uniform:
            return loc + scale * p;
        case ModelKind::cauchy:
            if (p <= 0.0) return -kInf;
            if (p >= 1.0) return kInf;
            return loc + scale * std::tan(kPi * (p - 0.5));
        case ModelKind::custom:
            return custom_quantile(p);
    }
    return 0.0;
}

double PopulationModel::quantile_clamped(double p) const {
    const double x = quantile(p);
    if (std::isinf(x)) return x > 0 ? 8.5e307 : -8.5e307;
    return x;
}

std::string PopulationModel::name() const {
    switch (kind) {
        case ModelKind::normal: return "normal";
        case ModelKind::uniform: return "uniform";
        case ModelKind::cauchy: return "cauchy";
        case ModelKind::custom: return label.empty() ? "custom" : label;
    }
    return "?";
}

PopulationModel PopulationModel::normal(double mean, double sd) {
    PopulationModel m;
    m.kind = ModelKind::normal;
    m.loc = mean;
    m.scale = sd;
    return m;
}

PopulationModel PopulationModel::uniform(double a, double b) {
    if (!(b > a)) throw std::invalid_argument("uniform: need b > a");
    PopulationModel m;
    m.kind = ModelKind::uniform;
    m.loc = a;
    m.scale = b - a;
    return m;
}

PopulationModel PopulationModel::cauchy(double x0, double gamma) {
    PopulationModel m;
    m.kind = ModelKind::cauchy;
    m.loc = x0;
    m.scale = gamma;
    return m;
}

PopulationModel PopulationModel::custom(std::function<double(double)> cdf,
                                        std::function<double(double)> pdf,
                                        std::function<double(double)> quantile,
                                        std::string label) {
    PopulationModel m;
    m.kind = ModelKind::custom;
    m.custom_cdf = std::move(cdf);
    m.custom_pdf = std::move(pdf);
    m.custom_quantile = std::move(quantile);
    m.label = std::move(label);
    return m;
}

PopulationModel make_model_by_name(const std::string& name) {
    if (name == "normal") return PopulationModel::normal();
    if (name == "uniform") return PopulationModel::uniform();
    if (name == "cauchy") return PopulationModel::cauchy();
    throw std::invalid_argument("unknown model: " + name);
}

}  // namespace robustbp
