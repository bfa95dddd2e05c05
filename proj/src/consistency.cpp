#include "pnorm/consistency.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace pnorm {

double finite_p_criterion(const ThetaProfile& theta, double p) {
    double sum = 0.0;
    for (const double x : theta.theta) sum += g_p(p, x);
    return sum / std::sqrt(static_cast<double>(theta.d()));
}

double lambda_criterion(const ThetaProfile& theta, double p) {
    // Canonical profiles repeat a handful of values; quadrature once per value.
    std::unordered_map<double, double> cache;
    const double base = lambda_p(p, 0.0);
    double sum = 0.0;
    for (const double x : theta.theta) {
        const double key = std::abs(x);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, lambda_p(p, key) - base).first;
        sum += it->second;
    }
    return sum / std::sqrt(static_cast<double>(theta.d()));
}

double sup_centering(long d) {
    if (d < 1) throw std::domain_error("sup_centering: d must be >= 1");
    if (d == 1) return 0.0;
    const double log_d = std::log(static_cast<double>(d));
    const double s = std::sqrt(2.0 * log_d);
    return s - std::log(log_d) / (2.0 * s);
}

double sup_criterion(const ThetaProfile& theta) {
    const double c = sup_centering(static_cast<long>(theta.d()));
    std::unordered_map<double, double> cache;
    double sum = 0.0;
    for (const double x : theta.theta) {
        const double key = std::abs(x);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, mills_odds(c - key)).first;
        sum += it->second;
    }
    return std::isfinite(sum) ? sum : std::numeric_limits<double>::max();
}

double local_power(double p, double alpha, double c) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("local_power: alpha must lie in (0, 1)");
    return normal_sf(normal_upper_quantile(alpha) - c / sigma_p(p));
}

AlternativeKind parse_alternative(const std::string& name) {
    if (name == "sparse") return AlternativeKind::sparse;
    if (name == "dense") return AlternativeKind::dense;
    if (name == "semi_sparse" || name == "semi-sparse") return AlternativeKind::semi_sparse;
    throw std::invalid_argument("unknown alternative '" + name + "' (expected sparse|dense|semi_sparse)");
}

std::string to_string(AlternativeKind kind) {
    switch (kind) {
        case AlternativeKind::sparse: return "sparse";
        case AlternativeKind::dense: return "dense";
        case AlternativeKind::semi_sparse: return "semi_sparse";
    }
    return "unknown";
}

ThetaProfile make_alternative(AlternativeKind kind, long d, const AlternativeParams& params) {
    if (d < 2) throw std::invalid_argument("make_alternative: d must be >= 2");
    const double log_d = std::log(static_cast<double>(d));
    ThetaProfile out{Vector::Zero(d)};
    switch (kind) {
        case AlternativeKind::sparse:
            out.theta(0) = std::sqrt(3.0 * log_d);
            break;
        case AlternativeKind::dense:
            out.theta.setConstant(1.0 / std::sqrt(log_d));
            break;
        case AlternativeKind::semi_sparse: {
            if (!(params.t > 0.0) || !(params.k_scale > 0.0)) {
                throw std::invalid_argument("make_alternative: semi_sparse needs t > 0 and k_scale > 0");
            }
            const double k_real = std::ceil(params.k_scale * std::sqrt(static_cast<double>(d)) / (log_d * log_d));
            if (k_real < 1.0 || k_real > static_cast<double>(d)) {
                throw std::invalid_argument("make_alternative: semi_sparse support does not fit in d");
            }
            out.theta.head(static_cast<Eigen::Index>(k_real)).setConstant(std::sqrt(2.0 * params.t * log_d));
            break;
        }
    }
    out.theta *= params.scale;
    return out;
}

}  // namespace pnorm
