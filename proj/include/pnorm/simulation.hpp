#pragma once

#include "pnorm/consistency.hpp"
#include "pnorm/dgp.hpp"
#include "pnorm/sample_split.hpp"

#include <string>
#include <vector>

namespace pnorm {

enum class ExperimentKind { gaussian, limit, iv, rct, split };
ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

/// Which decisions are recorded for every replication.
struct TestSelection {
    std::vector<Exponent> exponents{Exponent(2.0), Exponent::infinity()};
    bool psi = true;
    /// Also record the combined rule with c_n replaced by 1.
    bool psi_clipped = false;
    std::vector<CovEstimator> estimators{CovEstimator::truncated};
    double trunc_mult = 3.0;
    StandaloneMode standalone = StandaloneMode::asymptotic;
    long standalone_mc_reps = 200000;
};

/// Exponent grid and allocation of the combined test, and its calibration.
struct CalibrationConfig {
    bool custom = false;
    int max_m = kDefaultMaxGrid;
    double alpha_2 = 0.0;
    double alpha_inf = 0.0;
    std::vector<double> p_grid;
    std::vector<double> shares;
    long reps = 0;  // 0 picks max(200000, the minimum for the smallest share)
    std::uint64_t seed = 20240917;

    DominantTestSpec spec(long d, double alpha) const;
};

struct GaussianSetup {
    long n = 0;
    long d = 0;
    Vector mean;
    CovStructure cov;
};

struct LimitSetup {
    ThetaProfile theta;
};

struct IvSetup {
    IvConfig model;
    std::vector<double> beta_star;
};

struct RctSetup {
    RctConfig model;
    Vector beta_star;
};

struct SplitSetup {
    long n = 0;
    long total = 0;  // D
    long d = 0;
    double frac1 = 0.5;
    Vector mean;     // length D
    CovStructure cov;
    std::vector<SelectionRule> rules{SelectionRule::top};
    Exponent greedy_p = Exponent(2.0);
};

struct ExperimentConfig {
    std::string id = "experiment";
    ExperimentKind kind = ExperimentKind::gaussian;
    long reps = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double alpha = 0.05;
    bool record_statistics = false;
    TestSelection tests;
    CalibrationConfig calibration;
    GaussianSetup gaussian;
    LimitSetup limit;
    IvSetup iv;
    RctSetup rct;
    SplitSetup split;
    Json source;  // the parsed document, echoed in reports

    /// Dimension of the tested moment vector.
    long test_dimension() const;
    /// Throws ConfigError with the offending field path.
    static ExperimentConfig from_json(const Json& j);
};

struct ReplicationRecord {
    long rep = 0;
    std::vector<char> reject;        // aligned with SimulationReport::tests
    std::vector<double> statistics;  // filled when record_statistics
};

struct TestAggregate {
    std::string test;
    long rejections = 0;
    double rate = 0.0;
    double mc_se = 0.0;
};

struct SimulationReport {
    std::string id;
    Json config;
    std::uint64_t seed = 0;
    long reps = 0;
    std::vector<std::string> tests;
    std::vector<ReplicationRecord> replications;
    std::vector<TestAggregate> aggregates;
    double wall_clock_seconds = 0.0;
    double c_n = 1.0;
    bool conservative = false;

    /// Throws std::out_of_range for an unknown label.
    const TestAggregate& aggregate(const std::string& test) const;
    double rate(const std::string& test) const { return aggregate(test).rate; }
    Json to_json(bool include_timing = true) const;
};

/// Rates and standard errors from per-replication flags.
std::vector<TestAggregate> aggregate_flags(const std::vector<std::string>& tests,
                                           const std::vector<ReplicationRecord>& records);

/// Runs `config.reps` replications; replication r draws its data from a
/// stream keyed by (seed, r), so reports do not depend on `threads`. A
/// calibrated `spec` for the test dimension may be supplied to skip
/// calibration.
SimulationReport run_experiment(const ExperimentConfig& config, const DominantTestSpec* spec = nullptr);

}  // namespace pnorm
