#pragma once

#include "pnorm/test_engine.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace pnorm {

using IndexSet = std::vector<Eigen::Index>;

/// Random partition of {0, ..., n-1} into folds of sizes ceil(frac1 n) and
/// the rest, each sorted. Throws std::invalid_argument when a fold has
/// fewer than 4 rows.
std::pair<IndexSet, IndexSet> split(long n, double frac1, std::uint64_t seed);

struct Selection {
    IndexSet indices;  // sorted
    IndexSet order;    // order in which indices were chosen
    std::vector<std::string> warnings;
};

/// The d coordinates with the largest |H_j| / sigma_hat_j on fold 1;
/// zero-variance coordinates score 0; ties go to the lower index.
Selection select_top_scaled(const MomentSample& fold1, long d);

/// Forward selection: each step adds the coordinate maximizing S_p on the
/// enlarged set, with the plug-in difference-pair covariance restricted to
/// that set. Ties go to the lower index; candidates whose covariance cannot
/// be whitened are skipped with a warning.
Selection select_greedy(const MomentSample& fold1, long d, Exponent p, double rank_tol = kDefaultRankTol,
                        unsigned threads = 1);

enum class SelectionRule { top, greedy };
SelectionRule parse_selection_rule(const std::string& name);
std::string to_string(SelectionRule rule);

/// Chooses d of the fold-1 columns.
using Selector = std::function<Selection(const MomentSample& fold1, long d)>;

Selector make_selector(SelectionRule rule, Exponent greedy_p = Exponent(2.0), double rank_tol = kDefaultRankTol,
                       unsigned threads = 1);

/// Selector returning a fixed, externally supplied index list.
Selector fixed_selector(IndexSet indices);

struct SplitTestResult {
    IndexSet fold1;
    IndexSet fold2;
    Selection selection;
    TestReport report;
    std::vector<std::string> warnings;

    Json to_json() const;
};

/// Selects on fold 1 and runs the full test on fold 2 restricted to the
/// selection. `spec` must be calibrated for dimension d.
SplitTestResult split_test(const MomentSample& sample, long d, const Selector& selector,
                           const DominantTestSpec& spec, const TestOptions& options, double frac1,
                           std::uint64_t seed, const CriticalMap* standalone = nullptr);

}  // namespace pnorm
