#pragma once

#include "pnorm/gaussian_moments.hpp"
#include "pnorm/json.hpp"

#include <cstdint>
#include <vector>

namespace pnorm {

/// [Phi^{-1}(1-alpha) sqrt(d) sigma_p + d lambda_p(0)]^{1/p}. Throws
/// std::domain_error when the bracket is not positive.
double kappa_p_asymptotic(double p, long d, double alpha);

/// Extreme-value approximation to the (1-alpha) quantile of ||Z_d||_inf.
/// Requires d >= 3; smaller d throws std::domain_error pointing at
/// kappa_inf_exact.
double kappa_inf_asymptotic(long d, double alpha);

/// Root t of (2 Phi(t) - 1)^d = 1 - alpha.
double kappa_inf_exact(long d, double alpha);

/// Order statistic number ceil((1 - alpha) * reps), 1-based, of `values`.
/// Reorders `values`.
double empirical_upper_quantile(std::vector<double>& values, double alpha);

/// Empirical (1-alpha) quantile of ||Z_d||_p over `reps` draws; draw r comes
/// from Stream(seed, {r}), so the result does not depend on `threads`.
double mc_pnorm_quantile(Exponent p, long d, double alpha, long reps, std::uint64_t seed,
                         unsigned threads = 1);

/// Norms of the same `reps` Gaussian draws for every exponent, laid out as
/// result[k][r]. This is the shared-draw matrix behind calibrate_joint.
std::vector<std::vector<double>> mc_norm_draws(const std::vector<Exponent>& exponents, long d, long reps,
                                               std::uint64_t seed, unsigned threads = 1);

struct ExponentShare {
    Exponent p;
    double share;
};

struct CriticalValueEntry {
    Exponent p;
    double alpha_share;
    double kappa;
};

/// Critical values of the combined test: one kappa per exponent, each at its
/// own share of alpha, and the joint threshold c_n.
struct CriticalValueTable {
    long d = 0;
    double alpha_total = 0.0;
    std::vector<CriticalValueEntry> entries;  // sorted by exponent
    double c_n = 1.0;
    bool conservative = false;  // empirical c_n exceeded 1 and was clipped
    long mc_reps = 0;
    std::uint64_t seed = 0;

    /// Throws std::out_of_range when p is not in the table.
    double kappa(Exponent p) const;
    std::vector<Exponent> exponents() const;

    Json to_json() const;
    static CriticalValueTable from_json(const Json& j);
};

/// Calibrates every kappa and c_n from ONE shared set of `reps` draws:
/// kappa_p is the (1 - share_p) quantile of ||Z||_p and c_n the
/// (1 - alpha_total) quantile of max_p ||Z||_p / kappa_p, clipped to 1.
/// Throws std::invalid_argument when shares are not positive, do not sum to
/// alpha_total, or min share * reps < 100.
CriticalValueTable calibrate_joint(std::vector<ExponentShare> grid, long d, double alpha_total, long reps,
                                   std::uint64_t seed, unsigned threads = 1);

/// Smallest reps accepted by calibrate_joint for the given smallest share.
long min_reps_for_share(double min_share);

/// Rejection rate of the combined rule max_p ||Z||_p / kappa_p >= c_n on
/// draws from Stream(seed, {r}); pass a seed unused for calibration to get an
/// out-of-sample check. `c_n_override` > 0 replaces the table's c_n.
double null_rejection_rate(const CriticalValueTable& table, long reps, std::uint64_t seed, unsigned threads = 1,
                           double c_n_override = 0.0);

}  // namespace pnorm
