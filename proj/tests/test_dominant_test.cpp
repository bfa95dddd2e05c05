#include "pnorm/dominant_test.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace pnorm;

namespace {

double share_sum(const DominantTestSpec& s) {
    return std::accumulate(s.per_p_shares.begin(), s.per_p_shares.end(), 0.0);
}

}  // namespace

TEST(DefaultSpec, SmallestDimension) {
    const auto s = default_spec(2, 0.06);
    ASSERT_EQ(s.p_grid.size(), 1u);
    EXPECT_EQ(s.p_grid[0], 3.0);
    EXPECT_NEAR(s.per_p_shares[0], 0.02, 1e-15);
    EXPECT_NEAR(s.alpha_2, 0.02, 1e-15);
    EXPECT_NEAR(s.alpha_inf, 0.02, 1e-15);
}

TEST(DefaultSpec, PowerOfTwoDimension) {
    const auto s = default_spec(256, 0.05);
    ASSERT_EQ(s.p_grid.size(), 8u);
    for (std::size_t j = 0; j < 8; ++j) {
        EXPECT_EQ(s.p_grid[j], 3.0 + static_cast<double>(j));
        if (j > 0) EXPECT_NEAR(s.per_p_shares[j] / s.per_p_shares[j - 1], 0.5, 1e-12);
    }
    EXPECT_NEAR(share_sum(s), 0.05 / 3.0, 1e-12);
}

TEST(DefaultSpec, PartitionOfAlphaAndCap) {
    for (const long d : {2L, 3L, 17L, 100L, 5000L, 1000000L}) {
        for (const double a : {0.01, 0.05, 0.1}) {
            const auto s = default_spec(d, a);
            EXPECT_NEAR(share_sum(s) + s.alpha_2 + s.alpha_inf, a, 1e-12);
            EXPECT_LE(s.p_grid.size(), 12u);
            EXPECT_NO_THROW(s.validate());
        }
    }
    EXPECT_EQ(default_spec(5000, 0.05, 4).p_grid.size(), 4u);
    EXPECT_THROW(default_spec(1, 0.05), std::invalid_argument);
}

TEST(Spec, ValidationCatchesBrokenInvariants) {
    EXPECT_THROW(custom_spec(10, 0.05, 0.02, 0.02, {3.0, 3.0}, {0.005, 0.005}), std::invalid_argument);
    EXPECT_THROW(custom_spec(10, 0.05, 0.02, 0.02, {2.0}, {0.01}), std::invalid_argument);
    EXPECT_THROW(custom_spec(10, 0.05, 0.03, 0.03, {3.0}, {0.01}), std::invalid_argument);
    EXPECT_NO_THROW(custom_spec(10, 0.05, 0.05, 0.0, {}, {}));
}

TEST(Spec, ZeroShareExponentsAreDropped) {
    const auto s = custom_spec(10, 0.05, 0.05, 0.0, {}, {});
    ASSERT_EQ(s.exponents().size(), 1u);
    EXPECT_EQ(s.exponents()[0], Exponent(2.0));
}

TEST(Spec, JsonRoundTrip) {
    const auto s = calibrate(default_spec(16, 0.05), 100000, 3);
    const auto t = DominantTestSpec::from_json(Json::parse(s.to_json().dump()));
    EXPECT_EQ(t.to_json(), s.to_json());
    ASSERT_TRUE(t.calibrated());
    EXPECT_EQ(t.critical_values().c_n, s.critical_values().c_n);
    EXPECT_THROW(default_spec(16, 0.05).critical_values(), std::logic_error);
}

TEST(EvaluatePsi, Examples) {
    const auto spec = calibrate(default_spec(8, 0.05), 50000, 4);
    const auto& table = spec.critical_values();
    StatisticMap zero;
    for (const auto& p : table.exponents()) zero[p] = 0.0;
    EXPECT_FALSE(evaluate_psi(zero, spec));

    for (const auto& p : table.exponents()) {
        StatisticMap stats = zero;
        stats[p] = 2.0 * table.kappa(p);
        EXPECT_TRUE(evaluate_psi(stats, spec)) << p.to_string();
        stats[p] = table.c_n * table.kappa(p);
        // Boundary counts as a rejection up to the rounding of c_n * kappa / kappa.
        const double ratio = stats[p] / table.kappa(p);
        EXPECT_EQ(evaluate_psi(stats, spec), ratio >= table.c_n) << p.to_string();
    }
    StatisticMap missing = zero;
    missing.erase(Exponent::infinity());
    EXPECT_THROW(evaluate_psi(missing, spec), std::invalid_argument);
}

TEST(EvaluatePsi, BoundaryUsesGreaterOrEqual) {
    CriticalValueTable t;
    t.d = 2;
    t.alpha_total = 0.05;
    t.entries = {{Exponent(2.0), 0.05, 2.0}};
    t.c_n = 0.5;
    DominantTestSpec spec = custom_spec(2, 0.05, 0.05, 0.0, {}, {});
    spec.table = t;
    EXPECT_TRUE(evaluate_psi({{Exponent(2.0), 1.0}}, spec));
    EXPECT_FALSE(evaluate_psi({{Exponent(2.0), std::nextafter(1.0, 0.0)}}, spec));
}

TEST(EvaluatePsi, MonotoneInStatistics) {
    const auto spec = calibrate(default_spec(8, 0.05), 50000, 4);
    StatisticMap stats;
    for (const auto& p : spec.critical_values().exponents()) stats[p] = 0.7 * spec.critical_values().kappa(p);
    bool prev = evaluate_psi(stats, spec);
    for (int step = 0; step < 20; ++step) {
        for (auto& [p, v] : stats) {
            v *= 1.03;
            const bool now = evaluate_psi(stats, spec);
            EXPECT_TRUE(now || !prev);
            prev = now;
        }
    }
}

TEST(PowerLossBound, Examples) {
    EXPECT_EQ(power_loss_bound(Exponent(3.0), 0.05, 0.05), 0.0);
    EXPECT_EQ(power_loss_bound(Exponent::infinity(), 0.05, 0.05), 0.0);
    EXPECT_NEAR(power_loss_bound(Exponent(2.0), 0.05, 0.05 / 3.0), 0.193, 1e-3);
    EXPECT_NEAR(power_loss_bound(Exponent::infinity(), 0.05, 0.05 / 3.0), 1.116, 1e-3);
    EXPECT_THROW(power_loss_bound(Exponent(2.0), 0.05, 0.06), std::domain_error);
}

TEST(PowerLossBound, IncreasesAsShareShrinks) {
    for (const auto& p : {Exponent(2.0), Exponent::infinity()}) {
        double prev = 0.0;
        for (double a = 0.05; a > 1e-4; a *= 0.8) {
            const double b = power_loss_bound(p, 0.05, a);
            EXPECT_GE(b, prev);
            if (a < 0.05) EXPECT_GT(b, prev);
            prev = b;
        }
    }
}
