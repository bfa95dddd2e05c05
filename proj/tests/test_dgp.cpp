#include "pnorm/dgp.hpp"

#include <gtest/gtest.h>

#include <iostream>

#include <cmath>

using namespace pnorm;

namespace {

IvConfig iv_config(long n, long d) {
    IvConfig c;
    c.n = n;
    c.d = d;
    c.beta_true = 0.5;
    c.pi = Vector::Zero(d);
    c.rho = 0.6;
    return c;
}

Vector column_mean(const MomentSample& s) { return s.values().colwise().mean().transpose(); }

}  // namespace

TEST(IvModel, UnidentifiedNullForEveryBeta) {
    const IvConfig cfg = iv_config(100, 3);
    for (const double b : {-3.0, 0.0, 0.5, 10.0}) {
        EXPECT_EQ(iv_population_moment(cfg, b).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(IvModel, PopulationMomentSingleEntry) {
    IvConfig cfg = iv_config(100, 4);
    cfg.pi(0) = 0.8;
    const Vector m = iv_population_moment(cfg, 2.0);
    EXPECT_NEAR(m(0), 0.8 * (0.5 - 2.0), 1e-15);
    EXPECT_EQ(m.tail(3).cwiseAbs().maxCoeff(), 0.0);
}

TEST(IvModel, SampleMeansConverge) {
    IvConfig cfg = iv_config(100000, 3);
    cfg.pi << 0.5, 0.2, 0.0;
    cfg.instrument_cov = CovStructure{CovStructure::Kind::toeplitz, 0.4};
    const double beta = -0.5;
    const MomentSample s = gen_iv(cfg, beta, 11);
    const Vector diff = column_mean(s) - iv_population_moment(cfg, beta);
    const double maxvar = (s.values().rowwise() - s.values().colwise().mean()).colwise().squaredNorm().maxCoeff()
                          / static_cast<double>(cfg.n);
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 5.0 * std::sqrt(maxvar / static_cast<double>(cfg.n)));
}

TEST(IvModel, NullOrthogonalityVariance) {
    IvConfig cfg = iv_config(200, 3);
    cfg.pi = Vector::Constant(3, 0.3);
    const int reps = 2000;
    Matrix scaled(reps, 3);
    for (int r = 0; r < reps; ++r) {
        const MomentSample s = gen_iv(cfg, cfg.beta_true, static_cast<std::uint64_t>(r));
        scaled.row(r) = std::sqrt(static_cast<double>(cfg.n)) * s.values().colwise().mean();
    }
    // Under the null the moment is u z with Var = E u^2 E z^2 = 1.
    const Vector var = (scaled.rowwise() - scaled.colwise().mean()).colwise().squaredNorm() / (reps - 1.0);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(var(j), 1.0, 0.1);
}

TEST(IvModel, Deterministic) {
    IvConfig cfg = iv_config(50, 4);
    cfg.error_dist = ErrorDist{ErrorDist::Kind::student_t, 6.0};
    EXPECT_EQ(gen_iv(cfg, 0.0, 3).values(), gen_iv(cfg, 0.0, 3).values());
    EXPECT_NE(gen_iv(cfg, 0.0, 3).values(), gen_iv(cfg, 0.0, 4).values());
}

TEST(IvConfig, JsonParsingAndErrors) {
    const Json j = Json::parse(R"({"n": 10, "d": 3, "beta_true": 1, "pi": {"value": 0.4, "support": 2},
                                   "rho": 0.3, "instrument_cov": {"toeplitz": 0.5}, "error_dist": {"t": 5}})");
    const IvConfig c = IvConfig::from_json(j);
    EXPECT_EQ(c.pi(1), 0.4);
    EXPECT_EQ(c.pi(2), 0.0);
    EXPECT_EQ(c.instrument_cov.kind, CovStructure::Kind::toeplitz);
    EXPECT_EQ(IvConfig::from_json(c.to_json()).to_json(), c.to_json());
    Json bad = j;
    bad["rho"] = 1.5;
    try {
        IvConfig::from_json(bad);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "iv.rho");
    }
    bad = j;
    bad["error_dist"] = Json{{"t", 3}};
    EXPECT_THROW(IvConfig::from_json(bad), ConfigError);
    bad = j;
    bad.erase("n");
    try {
        IvConfig::from_json(bad);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "iv.n");
    }
}

// Rows are N(0, 4 I) here. The size check uses the finite-d critical value;
// the asymptotic one at d = 10 sits below the chi-square quantile and is
// only logged.
TEST(Rct, ZeroEffectNullSize) {
    RctConfig cfg;
    cfg.n = 2000;
    cfg.d = 10;
    cfg.effect = Vector::Zero(10);
    const DominantTestSpec spec = calibrate(default_spec(10, 0.05), 200000, 1);
    TestOptions mc;
    mc.standalone = StandaloneMode::monte_carlo;
    const CriticalMap mc_crit = standalone_criticals(report_exponents(spec, mc), 10, mc);
    int rejections = 0;
    const CriticalMap asym_crit = standalone_criticals(report_exponents(spec, TestOptions{}), 10, TestOptions{});
    int asymptotic = 0;
    const int reps = 5000;
    for (int r = 0; r < reps; ++r) {
        const MomentSample s = gen_rct(cfg, Vector::Zero(10), static_cast<std::uint64_t>(r));
        rejections += run_tests(s, spec, mc, &mc_crit).record(Exponent(2.0)).reject ? 1 : 0;
        asymptotic += run_tests(s, spec, TestOptions{}, &asym_crit).record(Exponent(2.0)).reject ? 1 : 0;
    }
    std::cout << "[ rct size ] finite-d " << rejections / static_cast<double>(reps) << ", asymptotic "
              << asymptotic / static_cast<double>(reps) << "\n";
    EXPECT_NEAR(rejections / static_cast<double>(reps), 0.05, 0.02);
}

TEST(Rct, UnitEffectCancelsAndOffsetShows) {
    RctConfig cfg;
    cfg.n = 200000;
    cfg.d = 3;
    cfg.effect = Vector::Ones(3);
    cfg.baseline = Vector::Constant(3, 2.0);
    const MomentSample null = gen_rct(cfg, Vector::Ones(3), 5);
    const double se = 5.0 * std::sqrt(4.0 * (1.0 + 9.0) / static_cast<double>(cfg.n));
    EXPECT_LE(column_mean(null).cwiseAbs().maxCoeff(), se);
    Vector off = Vector::Ones(3);
    off(1) += 0.25;
    const MomentSample shifted = gen_rct(cfg, off, 5);
    EXPECT_NEAR(column_mean(shifted)(1), -0.25, se);
    EXPECT_EQ(gen_rct(cfg, off, 5).values(), shifted.values());
}

TEST(GaussianLimit, MeansAndNoncentralChiSquare) {
    const long d = 10;
    Vector theta(d);
    for (long i = 0; i < d; ++i) theta(i) = 0.2 * static_cast<double>(i);
    const int reps = 100000;
    Vector sum = Vector::Zero(d);
    double sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        const Vector v = gen_gaussian_limit(ThetaProfile{theta}, static_cast<std::uint64_t>(r));
        sum += v;
        sq += v.squaredNorm();
    }
    EXPECT_LE((sum / reps - theta).cwiseAbs().maxCoeff(), 0.02);
    const double want = static_cast<double>(d) + theta.squaredNorm();
    const double se = std::sqrt((2.0 * d + 4.0 * theta.squaredNorm()) / reps);
    EXPECT_NEAR(sq / reps, want, 4.0 * se);
}

TEST(GaussianLimit, NullPooledMeans) {
    const long d = 100;
    const int reps = 10000;  // 10^6 pooled coordinates
    double pooled = 0.0;
    for (int r = 0; r < reps; ++r) pooled += gen_gaussian_limit(ThetaProfile{Vector::Zero(d)}, static_cast<std::uint64_t>(r)).sum();
    EXPECT_LE(std::abs(pooled / (d * reps)), 0.005);
}

TEST(GaussianSample, ToeplitzCovariance) {
    const CovStructure c{CovStructure::Kind::toeplitz, 0.7};
    const MomentSample s = gen_gaussian_sample(100000, Vector::Zero(4), c, 3);
    const Matrix emp = s.values().transpose() * s.values() / 100000.0;
    EXPECT_LE((emp - c.matrix(4).matrix()).cwiseAbs().maxCoeff(), 0.03);
}
