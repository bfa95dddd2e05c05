#pragma once

#include "pnorm/test_engine.hpp"

#include <string>

namespace pnorm {

/// d^{-1/2} sum_i g_p(theta_i); the p-norm test is consistent iff this
/// diverges.
double finite_p_criterion(const ThetaProfile& theta, double p);

/// d^{-1/2} sum_i (lambda_p(theta_i) - lambda_p(0)); diverges iff
/// finite_p_criterion does.
double lambda_criterion(const ThetaProfile& theta, double p);

/// sqrt(2 log d) - log log d / (2 sqrt(2 log d)) for d >= 2, and 0 for d = 1.
double sup_centering(long d);

/// sum_i MillsOdds(c_d - |theta_i|); the sup-norm test is consistent iff
/// this diverges.
double sup_criterion(const ThetaProfile& theta);

/// Limiting power 1 - Phi(Phi^{-1}(1-alpha) - c/sigma_p) of the p-norm test
/// when the lambda criterion converges to c.
double local_power(double p, double alpha, double c);

enum class AlternativeKind { sparse, dense, semi_sparse };

AlternativeKind parse_alternative(const std::string& name);
std::string to_string(AlternativeKind kind);

struct AlternativeParams {
    /// Semi-sparse magnitude sqrt(2 t log d).
    double t = 0.08;
    /// Semi-sparse support size ceil(k_scale sqrt(d) / (log d)^2).
    double k_scale = 2.0;
    /// Multiplies every coordinate of the profile.
    double scale = 1.0;
};

/// Canonical alternatives:
///   sparse      (sqrt(3 log d), 0, ..., 0)
///   dense       every coordinate 1 / sqrt(log d)
///   semi_sparse k leading coordinates equal to sqrt(2 t log d), rest 0
/// Throws std::invalid_argument when d < 2 or the support exceeds d.
ThetaProfile make_alternative(AlternativeKind kind, long d, const AlternativeParams& params = {});

}  // namespace pnorm
