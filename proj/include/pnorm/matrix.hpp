#pragma once

#include <Eigen/Dense>

#include <utility>

namespace pnorm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. The constructor symmetrizes its argument as
/// (A + A^T) / 2 and rejects non-square or non-finite input.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix a);

    static SymMatrix identity(Eigen::Index d);
    static SymMatrix diagonal(const Vector& diag);

    Eigen::Index dim() const noexcept { return a_.rows(); }
    const Matrix& matrix() const noexcept { return a_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }

    SymMatrix scaled(double c) const;

private:
    Matrix a_;
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Spectral data of a PSD matrix after Moore-Penrose inverse square rooting.
struct Whitening {
    SymMatrix inv_sqrt;
    Eigen::Index rank = 0;
    double min_eig = 0.0;
    double max_eig = 0.0;
};

/// A^{-1/2} in the Moore-Penrose sense, with the rank and extreme eigenvalues
/// of A. Eigenvalues <= rank_tol * max eigenvalue map to 0. Throws
/// std::domain_error("not positive semidefinite") when an eigenvalue is below
/// -rank_tol * ||A||_2.
Whitening whiten(const SymMatrix& a, double rank_tol = kDefaultRankTol);

SymMatrix pinv_sqrt(const SymMatrix& a, double rank_tol = kDefaultRankTol);

/// Moore-Penrose pseudoinverse with the same thresholding as pinv_sqrt.
SymMatrix pinv(const SymMatrix& a, double rank_tol = kDefaultRankTol);

/// Largest absolute eigenvalue.
double spectral_norm(const SymMatrix& a);

/// (min eigenvalue, max eigenvalue).
std::pair<double, double> eigen_bounds(const SymMatrix& a);

}  // namespace pnorm
