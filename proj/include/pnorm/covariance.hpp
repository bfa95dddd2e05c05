#pragma once

#include "pnorm/matrix.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pnorm {

/// n x d array of evaluated moment functions; row i holds h(X_i, beta).
class MomentSample {
public:
    MomentSample() = default;
    /// Throws std::invalid_argument for an empty array or non-finite entries.
    explicit MomentSample(Matrix values);

    Eigen::Index n() const noexcept { return values_.rows(); }
    Eigen::Index d() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }

    /// Rows listed in `rows`, columns listed in `cols` (both in given order).
    MomentSample subset(const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) const;
    MomentSample rows(const std::vector<Eigen::Index>& rows) const;
    MomentSample columns(const std::vector<Eigen::Index>& cols) const;

private:
    Matrix values_;
};

/// Rows (h_2 - h_1)/sqrt(2), (h_4 - h_3)/sqrt(2), ... taken in input order; a
/// trailing odd row is dropped. Requires n >= 4.
MomentSample difference_pairs(const MomentSample& s);

/// (1/m) sum r_i r_i^T over the m rows, without centering.
SymMatrix sample_cov(const MomentSample& aux);

/// sample_cov after shrinking each row to norm at most
/// trunc_mult * median row norm.
SymMatrix truncated_cov(const MomentSample& aux, double trunc_mult = 3.0);

enum class CovEstimator { sample, truncated };

std::string to_string(CovEstimator e);
/// Accepts "sample", "trunc", "truncated".
CovEstimator parse_estimator(const std::string& name);

struct CovarianceOptions {
    CovEstimator estimator = CovEstimator::truncated;
    double trunc_mult = 3.0;
};

/// Maps an auxiliary (mean-zero) sample to a covariance estimate.
using CovarianceEstimator = std::function<SymMatrix(const MomentSample& aux)>;

CovarianceEstimator make_estimator(const CovarianceOptions& options);

/// Estimator applied to the difference-pair auxiliary sample of s.
SymMatrix estimate_covariance(const MomentSample& s, const CovarianceOptions& options);

/// Largest ratio (E<h - mu, t>^4)^{1/4} / (E<h - mu, t>^2)^{1/2} over
/// `directions` random unit vectors t; an empirical lower bound on the
/// fourth-to-second moment constant. Directions with projected variance
/// below 1e-14 are skipped; throws std::domain_error if all are.
double kurtosis_diagnostic(const MomentSample& s, int directions, std::uint64_t seed);

}  // namespace pnorm
