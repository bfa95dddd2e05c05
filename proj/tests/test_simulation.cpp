#include "pnorm/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pnorm;

namespace {

Json gaussian_config() {
    return Json::parse(R"({
        "schema_version": 1, "id": "unit", "kind": "gaussian", "reps": 200, "seed": 17,
        "tests": {"exponents": [2, 3, "inf"], "estimators": ["sample", "trunc"], "psi_clipped": true},
        "calibration": {"reps": 50000, "max_m": 3},
        "gaussian": {"n": 100, "d": 8}
    })");
}

}  // namespace

TEST(ExperimentConfig, ParsesAllKinds) {
    EXPECT_EQ(ExperimentConfig::from_json(gaussian_config()).test_dimension(), 8);
    const Json limit = Json::parse(R"({"schema_version": 1, "kind": "limit", "reps": 5,
        "limit": {"d": 10000, "theta": {"family": "semi_sparse", "k_scale": 1}}})");
    EXPECT_EQ(ExperimentConfig::from_json(limit).limit.theta.theta(1), ExperimentConfig::from_json(limit).limit.theta.theta(0));
    const Json iv = Json::parse(R"({"schema_version": 1, "kind": "iv", "reps": 5,
        "iv": {"n": 100, "d": 3, "pi": 0, "beta_star": [0, 1]}})");
    EXPECT_EQ(ExperimentConfig::from_json(iv).iv.beta_star.size(), 2u);
    const Json split = Json::parse(R"({"schema_version": 1, "kind": "split", "reps": 5,
        "split": {"n": 100, "D": 40, "d": 4, "select": ["top", "greedy"], "mean_se": {"value": 8, "support": 1}}})");
    const auto sc = ExperimentConfig::from_json(split);
    EXPECT_NEAR(sc.split.mean(0), 0.8, 1e-15);
    EXPECT_EQ(sc.split.rules.size(), 2u);
}

TEST(ExperimentConfig, ErrorsCarryFieldPath) {
    auto expect_path = [](Json j, const std::string& path) {
        try {
            ExperimentConfig::from_json(j);
            FAIL() << "expected ConfigError at " << path;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.path(), path) << e.what();
        }
    };
    Json j = gaussian_config();
    j["reps"] = 0;
    expect_path(j, "reps");
    j = gaussian_config();
    j.erase("schema_version");
    expect_path(j, ".schema_version");
    j = gaussian_config();
    j["gaussian"].erase("n");
    expect_path(j, "gaussian.n");
    j = gaussian_config();
    j["tests"]["exponents"][1] = 1.5;
    expect_path(j, "tests.exponents[1]");
    j = gaussian_config();
    j["tests"]["estimators"] = {"oas"};
    expect_path(j, "tests.estimators");
    j = gaussian_config();
    j["kind"] = "bootstrap";
    expect_path(j, "kind");
}

TEST(ExperimentConfig, ZeroRepsMessage) {
    Json j = gaussian_config();
    j["reps"] = 0;
    try {
        ExperimentConfig::from_json(j);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("reps must be >= 1"), std::string::npos);
    }
}

TEST(RunExperiment, LabelsAndAggregation) {
    const SimulationReport rep = run_experiment(ExperimentConfig::from_json(gaussian_config()));
    const std::vector<std::string> want{"p=2/sample", "p=3/sample", "p=inf/sample", "psi/sample", "psi_c1/sample",
                                        "p=2/trunc",  "p=3/trunc",  "p=inf/trunc",  "psi/trunc",  "psi_c1/trunc"};
    EXPECT_EQ(rep.tests, want);
    ASSERT_EQ(rep.replications.size(), 200u);
    const auto again = aggregate_flags(rep.tests, rep.replications);
    for (std::size_t k = 0; k < want.size(); ++k) {
        EXPECT_EQ(again[k].rate, rep.aggregates[k].rate);
        long count = 0;
        for (const auto& r : rep.replications) count += r.reject[k];
        EXPECT_EQ(rep.aggregates[k].rate, count / 200.0);
        const double rate = rep.aggregates[k].rate;
        EXPECT_DOUBLE_EQ(rep.aggregates[k].mc_se, std::sqrt(rate * (1.0 - rate) / 200.0));
    }
    // c_n <= 1, so the clipped rule never rejects more often.
    EXPECT_LE(rep.rate("psi_c1/trunc"), rep.rate("psi/trunc"));
}

TEST(RunExperiment, BitIdenticalAndThreadIndependent) {
    Json j = gaussian_config();
    const auto a = run_experiment(ExperimentConfig::from_json(j)).to_json(false).dump();
    const auto b = run_experiment(ExperimentConfig::from_json(j)).to_json(false).dump();
    j["threads"] = 3;
    const auto c = run_experiment(ExperimentConfig::from_json(j)).to_json(false);
    EXPECT_EQ(a, b);
    Json cj = c;
    cj["config"].erase("threads");
    Json aj = Json::parse(a);
    EXPECT_EQ(aj.at("replications"), cj.at("replications"));
    EXPECT_EQ(aj.at("aggregates"), cj.at("aggregates"));
}

TEST(RunExperiment, LimitIvRctSplitKindsRun) {
    const char* configs[] = {
        R"({"schema_version": 1, "kind": "limit", "reps": 50, "calibration": {"max_m": 3, "reps": 50000},
            "limit": {"d": 20, "theta": 0.5}})",
        R"({"schema_version": 1, "kind": "iv", "reps": 20, "calibration": {"reps": 50000},
            "iv": {"n": 200, "d": 4, "pi": 0.3, "beta_true": 1, "beta_star": [1, 3]}})",
        R"({"schema_version": 1, "kind": "rct", "reps": 20, "calibration": {"reps": 50000},
            "rct": {"n": 200, "d": 4, "effect": 0.0}})",
        R"({"schema_version": 1, "kind": "split", "reps": 10, "calibration": {"reps": 50000},
            "split": {"n": 200, "D": 30, "d": 3, "select": ["top", "greedy"]}})"};
    for (const char* text : configs) {
        const auto rep = run_experiment(ExperimentConfig::from_json(Json::parse(text)));
        EXPECT_FALSE(rep.tests.empty());
        EXPECT_NO_THROW(rep.to_json().dump());
    }
    const auto iv = run_experiment(ExperimentConfig::from_json(Json::parse(configs[1])));
    EXPECT_NO_THROW(iv.aggregate("beta=3/psi/trunc"));
    // beta* = 3 is far from beta_true with informative instruments.
    EXPECT_GT(iv.rate("beta=3/p=2/trunc"), 0.9);
}

TEST(RunExperiment, SuppliedSpecSkipsCalibration) {
    Json j = gaussian_config();
    const auto cfg = ExperimentConfig::from_json(j);
    const DominantTestSpec spec = calibrate(default_spec(8, 0.05, 3), 50000, cfg.calibration.seed);
    EXPECT_EQ(run_experiment(cfg, &spec).to_json(false), run_experiment(cfg).to_json(false));
    const DominantTestSpec wrong = calibrate(default_spec(9, 0.05, 3), 50000, 1);
    EXPECT_THROW(run_experiment(cfg, &wrong), std::invalid_argument);
}
