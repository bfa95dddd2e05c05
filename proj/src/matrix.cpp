#include "pnorm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pnorm {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> decompose(const SymMatrix& a, bool vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(
        a.matrix(), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigendecomposition failed");
    }
    return solver;
}

// Applies f to the thresholded spectrum: eigenvalues above the relative
// cutoff go through f, the rest map to zero.
template <typename F>
Whitening spectral_function(const SymMatrix& a, double rank_tol, F f) {
    Whitening out;
    const Eigen::Index d = a.dim();
    if (d == 0) {
        throw std::invalid_argument("empty matrix");
    }
    const auto solver = decompose(a, true);
    const Vector& evals = solver.eigenvalues();
    out.min_eig = evals(0);
    out.max_eig = evals(d - 1);
    const double norm = std::max(std::abs(out.min_eig), std::abs(out.max_eig));
    if (out.min_eig < -rank_tol * norm) {
        throw std::domain_error("not positive semidefinite");
    }
    const double cutoff = rank_tol * std::max(out.max_eig, 0.0);
    Vector mapped(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (evals(i) > cutoff && evals(i) > 0.0) {
            mapped(i) = f(evals(i));
            ++out.rank;
        } else {
            mapped(i) = 0.0;
        }
    }
    const Matrix& v = solver.eigenvectors();
    out.inv_sqrt = SymMatrix(v * mapped.asDiagonal() * v.transpose());
    return out;
}

}  // namespace

SymMatrix::SymMatrix(Matrix a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("SymMatrix requires a square matrix");
    }
    if (!a.allFinite()) {
        throw std::invalid_argument("SymMatrix entries must be finite");
    }
    a_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index d) {
    return SymMatrix(Matrix::Identity(d, d));
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
    return SymMatrix(Matrix(diag.asDiagonal()));
}

SymMatrix SymMatrix::scaled(double c) const {
    SymMatrix out;
    out.a_ = c * a_;
    return out;
}

Whitening whiten(const SymMatrix& a, double rank_tol) {
    return spectral_function(a, rank_tol, [](double l) { return 1.0 / std::sqrt(l); });
}

SymMatrix pinv_sqrt(const SymMatrix& a, double rank_tol) {
    return whiten(a, rank_tol).inv_sqrt;
}

SymMatrix pinv(const SymMatrix& a, double rank_tol) {
    return spectral_function(a, rank_tol, [](double l) { return 1.0 / l; }).inv_sqrt;
}

double spectral_norm(const SymMatrix& a) {
    if (a.dim() == 0) return 0.0;
    const auto solver = decompose(a, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::pair<double, double> eigen_bounds(const SymMatrix& a) {
    if (a.dim() == 0) {
        throw std::invalid_argument("empty matrix");
    }
    const auto solver = decompose(a, false);
    return {solver.eigenvalues()(0), solver.eigenvalues()(a.dim() - 1)};
}

}  // namespace pnorm
