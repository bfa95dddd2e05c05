#include "pnorm/gaussian_moments.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pnorm {

namespace {

constexpr double kLargeShift = 25.0;

void check_exponent(double p) {
    if (!std::isfinite(p) || p < 2.0) {
        throw std::domain_error("exponent must be a finite real >= 2, got " + std::to_string(p));
    }
}

double central_abs_moment(double p) {
    // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi), evaluated in log space so
    // large p does not overflow an intermediate.
    return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0))
                    - 0.5 * std::log(std::numbers::pi));
}

detail::GaussHermiteRule build_rule() {
    // Golub-Welsch eigenvalues of the Jacobi matrix seed a Newton polish on
    // the orthonormal Hermite recurrence, which also yields the weights.
    detail::GaussHermiteRule rule{};
    constexpr int n = detail::GaussHermiteRule::kNodes;
    constexpr double pim4 = 0.7511255444649425;  // pi^{-1/4}
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> jacobi;
    jacobi.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (jacobi.info() != Eigen::Success) throw std::runtime_error("Gauss-Hermite eigenvalue solve failed");
    for (int i = 0; i < n; ++i) {
        double z = jacobi.eigenvalues()(n - 1 - i);  // descending
        double pp = 0.0;
        for (int iter = 0; iter < 8; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        rule.nodes[i] = z;
        rule.weights[i] = 2.0 / (pp * pp);
    }
    // Exact symmetry.
    for (int i = 0; i < n / 2; ++i) {
        const double node = 0.5 * (rule.nodes[i] - rule.nodes[n - 1 - i]);
        const double weight = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
        rule.nodes[i] = node;
        rule.nodes[n - 1 - i] = -node;
        rule.weights[i] = rule.weights[n - 1 - i] = weight;
    }
    return rule;
}

}  // namespace

Exponent::Exponent(double p) : p_(p), inf_(false) {
    if (std::isinf(p) && p > 0) {
        inf_ = true;
        p_ = 0.0;
        return;
    }
    check_exponent(p);
}

std::string Exponent::to_string() const {
    if (inf_) return "inf";
    std::ostringstream out;
    out.precision(17);
    out << p_;
    return out.str();
}

Exponent Exponent::parse(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity") {
        return infinity();
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse exponent '" + text + "'");
    }
    if (used != text.size()) {
        throw std::invalid_argument("cannot parse exponent '" + text + "'");
    }
    return Exponent(value);
}

namespace detail {

const GaussHermiteRule& gauss_hermite_rule() {
    static const GaussHermiteRule rule = build_rule();
    return rule;
}

double lambda_p_quadrature(double p, double x) {
    const auto& rule = gauss_hermite_rule();
    double sum = 0.0;
    for (int i = 0; i < GaussHermiteRule::kNodes; ++i) {
        sum += rule.weights[i] * std::pow(std::abs(std::numbers::sqrt2 * rule.nodes[i] + x), p);
    }
    return sum / std::sqrt(std::numbers::pi);
}

}  // namespace detail

double lambda_p(double p, double x) {
    check_exponent(p);
    if (!std::isfinite(x)) {
        throw std::domain_error("lambda_p: shift must be finite");
    }
    if (x == 0.0) return central_abs_moment(p);
    const double ax = std::abs(x);
    if (ax > kLargeShift) {
        return std::pow(ax, p) * (1.0 + p * (p - 1.0) / (2.0 * x * x));
    }
    // Quadrature noise can dip a hair below the exact minimum at x = 0.
    return std::max(detail::lambda_p_quadrature(p, x), central_abs_moment(p));
}

double sigma_p(double p) {
    check_exponent(p);
    const double m = central_abs_moment(p);
    return std::sqrt(central_abs_moment(2.0 * p) - m * m);
}

double g_p(double p, double x) {
    check_exponent(p);
    const double ax = std::abs(x);
    return std::max(ax * ax, std::pow(ax, p));
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_sf(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::domain_error("normal_quantile: probability must lie in (0, 1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double normal_upper_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw std::domain_error("normal_upper_quantile: probability must lie in (0, 1)");
    }
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double mills_odds(double x) {
    const double lower = normal_cdf(x);
    if (lower == 0.0) return std::numeric_limits<double>::max();
    const double ratio = normal_sf(x) / lower;
    return std::isfinite(ratio) ? ratio : std::numeric_limits<double>::max();
}

}  // namespace pnorm
