#pragma once

#include <compare>
#include <limits>
#include <string>

namespace pnorm {

/// Norm exponent p in [2, inf]. The infinite exponent is a distinguished
/// value that orders after every finite one.
class Exponent {
public:
    /// Throws std::domain_error unless p >= 2 and finite.
    explicit Exponent(double p);

    static Exponent infinity() noexcept { return Exponent(); }

    bool is_inf() const noexcept { return inf_; }

    /// Finite value; infinity() reports +inf.
    double value() const noexcept {
        return inf_ ? std::numeric_limits<double>::infinity() : p_;
    }

    /// "2", "3.5", "inf".
    std::string to_string() const;

    /// Inverse of to_string(); accepts "inf", "Inf", "infinity".
    static Exponent parse(const std::string& text);

    friend bool operator==(const Exponent& a, const Exponent& b) noexcept {
        return a.inf_ == b.inf_ && (a.inf_ || a.p_ == b.p_);
    }
    friend std::strong_ordering operator<=>(const Exponent& a, const Exponent& b) noexcept {
        if (a.inf_ || b.inf_) {
            return static_cast<int>(a.inf_) <=> static_cast<int>(b.inf_);
        }
        if (a.p_ < b.p_) return std::strong_ordering::less;
        if (a.p_ > b.p_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

private:
    Exponent() noexcept : p_(0.0), inf_(true) {}
    double p_;
    bool inf_;
};

/// E|Z + x|^p for Z ~ N(0,1), by 200-node Gauss-Hermite quadrature.
/// x = 0 uses the closed form 2^{p/2} Gamma((p+1)/2) / sqrt(pi); |x| > 25
/// uses the two-term expansion |x|^p (1 + p(p-1)/(2x^2)).
double lambda_p(double p, double x);

/// Standard deviation of |Z|^p.
double sigma_p(double p);

/// max(x^2, |x|^p).
double g_p(double p, double x);

double normal_cdf(double x);

/// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);

/// Phi^{-1}(u); throws std::domain_error unless 0 < u < 1.
double normal_quantile(double u);

/// Phi^{-1}(1 - q) computed from the upper-tail probability q directly.
double normal_upper_quantile(double q);

/// (1 - Phi(x)) / Phi(x). Saturates at DBL_MAX for x below about -37.5
/// where Phi(x) underflows.
double mills_odds(double x);

namespace detail {

struct GaussHermiteRule {
    static constexpr int kNodes = 200;
    double nodes[kNodes];
    double weights[kNodes];
};

/// Physicists' Gauss-Hermite rule (weight exp(-t^2)); computed once.
const GaussHermiteRule& gauss_hermite_rule();

/// Raw quadrature path of lambda_p, without the closed-form or asymptotic
/// branches.
double lambda_p_quadrature(double p, double x);

}  // namespace detail

}  // namespace pnorm
