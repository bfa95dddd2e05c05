#include "pnorm/covariance.hpp"

#include "pnorm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pnorm {

MomentSample::MomentSample(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        throw std::invalid_argument("moment sample needs at least one row and one column");
    }
    if (!values_.allFinite()) {
        throw std::invalid_argument("moment sample contains non-finite entries");
    }
}

MomentSample MomentSample::subset(const std::vector<Eigen::Index>& rows,
                                  const std::vector<Eigen::Index>& cols) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] < 0 || cols[j] >= d()) throw std::out_of_range("column index out of range");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] < 0 || rows[i] >= n()) throw std::out_of_range("row index out of range");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values_(rows[i], cols[j]);
        }
    }
    return MomentSample(std::move(out));
}

MomentSample MomentSample::rows(const std::vector<Eigen::Index>& rows) const {
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(d()));
    for (Eigen::Index j = 0; j < d(); ++j) cols[static_cast<std::size_t>(j)] = j;
    return subset(rows, cols);
}

MomentSample MomentSample::columns(const std::vector<Eigen::Index>& cols) const {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n()));
    for (Eigen::Index i = 0; i < n(); ++i) rows[static_cast<std::size_t>(i)] = i;
    return subset(rows, cols);
}

MomentSample difference_pairs(const MomentSample& s) {
    if (s.n() < 4) {
        throw std::invalid_argument("difference_pairs requires n >= 4");
    }
    const Eigen::Index m = s.n() / 2;
    const Matrix& v = s.values();
    Matrix out(m, s.d());
    for (Eigen::Index j = 0; j < s.d(); ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            out(i, j) = (v(2 * i + 1, j) - v(2 * i, j)) / std::numbers::sqrt2;
        }
    }
    return MomentSample(std::move(out));
}

SymMatrix sample_cov(const MomentSample& aux) {
    const Matrix& r = aux.values();
    Matrix cov = Matrix::Zero(aux.d(), aux.d());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose(), 1.0 / static_cast<double>(aux.n()));
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    return SymMatrix(std::move(cov));
}

SymMatrix truncated_cov(const MomentSample& aux, double trunc_mult) {
    if (!(trunc_mult > 0.0)) {
        throw std::invalid_argument("trunc_mult must be positive");
    }
    const Vector norms = aux.values().rowwise().norm();
    std::vector<double> sorted(norms.data(), norms.data() + norms.size());
    const std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
    double median = sorted[mid];
    if (sorted.size() % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    const double tau = trunc_mult * median;
    Matrix shrunk = aux.values();
    for (Eigen::Index i = 0; i < shrunk.rows(); ++i) {
        if (norms(i) > tau) shrunk.row(i) *= tau / norms(i);
    }
    return sample_cov(MomentSample(std::move(shrunk)));
}

std::string to_string(CovEstimator e) {
    return e == CovEstimator::sample ? "sample" : "trunc";
}

CovEstimator parse_estimator(const std::string& name) {
    if (name == "sample") return CovEstimator::sample;
    if (name == "trunc" || name == "truncated") return CovEstimator::truncated;
    throw std::invalid_argument("unknown covariance estimator '" + name + "' (expected sample|trunc)");
}

CovarianceEstimator make_estimator(const CovarianceOptions& options) {
    if (options.estimator == CovEstimator::sample) {
        return [](const MomentSample& aux) { return sample_cov(aux); };
    }
    const double mult = options.trunc_mult;
    return [mult](const MomentSample& aux) { return truncated_cov(aux, mult); };
}

SymMatrix estimate_covariance(const MomentSample& s, const CovarianceOptions& options) {
    return make_estimator(options)(difference_pairs(s));
}

double kurtosis_diagnostic(const MomentSample& s, int directions, std::uint64_t seed) {
    if (directions < 1) {
        throw std::invalid_argument("kurtosis_diagnostic needs at least one direction");
    }
    const Matrix centered = s.values().rowwise() - s.values().colwise().mean();
    const double n = static_cast<double>(s.n());
    double best = 0.0;
    bool any = false;
    for (int k = 0; k < directions; ++k) {
        Stream rng(seed, {static_cast<std::uint64_t>(k)});
        Vector t(s.d());
        rng.fill_normal(t.begin(), t.end());
        const double tn = t.norm();
        if (tn == 0.0) continue;
        t /= tn;
        const Vector proj = centered * t;
        const double m2 = proj.squaredNorm() / n;
        if (m2 < 1e-14) continue;
        const double m4 = proj.array().square().square().sum() / n;
        best = std::max(best, std::pow(m4, 0.25) / std::sqrt(m2));
        any = true;
    }
    if (!any) {
        throw std::domain_error("kurtosis_diagnostic: every direction has zero variance");
    }
    return best;
}

}  // namespace pnorm
