#include "pnorm/dgp.hpp"
#include "pnorm/sample_split.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace pnorm;

namespace {

MomentSample shifted_sample(long n, long total, const std::vector<std::pair<long, double>>& shifts_se,
                            std::uint64_t seed) {
    Vector mean = Vector::Zero(total);
    for (const auto& [j, se] : shifts_se) mean(j) = se / std::sqrt(static_cast<double>(n));
    return gen_gaussian_sample(n, mean, CovStructure{}, seed);
}

}  // namespace

TEST(Split, SizesAndPartition) {
    auto [a, b] = split(10, 0.5, 1);
    EXPECT_EQ(a.size(), 5u);
    EXPECT_EQ(b.size(), 5u);
    IndexSet all = a;
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    IndexSet want(10);
    std::iota(want.begin(), want.end(), Eigen::Index{0});
    EXPECT_EQ(all, want);
    EXPECT_EQ(split(100, 0.3, 2).first.size(), 30u);
    EXPECT_EQ(split(10, 0.5, 1), split(10, 0.5, 1));
    EXPECT_NE(split(100, 0.5, 1), split(100, 0.5, 2));
    EXPECT_THROW(split(7, 0.5, 1), std::invalid_argument);
    EXPECT_THROW(split(100, 0.98, 1), std::invalid_argument);
}

TEST(SelectTop, FindsShiftedCoordinate) {
    int hits = 0;
    for (int r = 0; r < 1000; ++r) {
        const MomentSample fold1 = shifted_sample(500, 50, {{13, 10.0}}, static_cast<std::uint64_t>(r));
        const Selection s = select_top_scaled(fold1, 1);
        hits += s.indices == IndexSet{13} ? 1 : 0;
    }
    EXPECT_GE(hits, 990);
}

TEST(SelectTop, FullSelectionAndTies) {
    const MomentSample s = shifted_sample(100, 6, {}, 3);
    IndexSet all(6);
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    EXPECT_EQ(select_top_scaled(s, 6).indices, all);

    Matrix m = s.values();
    m.col(1).array() += 1.0;  // column 1 now strongest
    m.col(4) = m.col(1);      // exact tie between 1 and 4
    const Selection tie = select_top_scaled(MomentSample(m), 1);
    EXPECT_EQ(tie.indices, IndexSet{1});
}

TEST(SelectTop, ZeroVarianceScoresZero) {
    Matrix m = shifted_sample(100, 4, {}, 4).values();
    m.col(0).setConstant(100.0);
    const Selection s = select_top_scaled(MomentSample(m), 3);
    EXPECT_EQ(std::count(s.indices.begin(), s.indices.end(), 0), 0);
    EXPECT_EQ(select_top_scaled(MomentSample(m), 4).indices.size(), 4u);
}

TEST(SelectTop, PermutationEquivariant) {
    const MomentSample s = shifted_sample(300, 20, {{2, 3.0}, {11, 4.0}, {17, 2.5}}, 5);
    std::vector<Eigen::Index> perm(20);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::reverse(perm.begin(), perm.end());
    const Selection base = select_top_scaled(s, 3);
    const Selection permuted = select_top_scaled(s.columns(perm), 3);
    IndexSet mapped;
    for (const auto j : permuted.indices) mapped.push_back(perm[static_cast<std::size_t>(j)]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, base.indices);
}

TEST(SelectGreedy, SingleStepMatchesTop) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const MomentSample s = shifted_sample(200, 30, {{5, 2.0}, {9, 2.5}}, seed);
        const IndexSet top = select_top_scaled(s, 1).indices;
        for (const auto& p : {Exponent(2.0), Exponent(3.0), Exponent::infinity()}) {
            EXPECT_EQ(select_greedy(s, 1, p).indices, top) << seed << " " << p.to_string();
        }
    }
}

TEST(SelectGreedy, OrthogonalSignals) {
    int hits = 0;
    for (int r = 0; r < 500; ++r) {
        const MomentSample s = shifted_sample(500, 40, {{3, 8.0}, {7, 8.0}}, static_cast<std::uint64_t>(r));
        hits += select_greedy(s, 2, Exponent(2.0)).indices == IndexSet{3, 7} ? 1 : 0;
    }
    EXPECT_GE(hits, 475);
}

TEST(SelectGreedy, FastPathAgreesWithGenericPath) {
    // p = 2 takes the Schur-complement path; p = 2.0000001 the generic whitening
    // path, whose statistic differs only in the far decimals.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MomentSample s = gen_gaussian_sample(300, Vector::Constant(25, 0.08), CovStructure{CovStructure::Kind::toeplitz, 0.5}, seed);
        const Selection fast = select_greedy(s, 6, Exponent(2.0));
        const Selection slow = select_greedy(s, 6, Exponent(2.0000001));
        EXPECT_EQ(fast.order, slow.order) << seed;
    }
}

TEST(SelectGreedy, DeterministicAndThreadIndependent) {
    const MomentSample s = shifted_sample(200, 60, {{1, 3.0}}, 8);
    const Selection a = select_greedy(s, 5, Exponent(4.0), kDefaultRankTol, 1);
    const Selection b = select_greedy(s, 5, Exponent(4.0), kDefaultRankTol, 3);
    EXPECT_EQ(a.order, b.order);
    EXPECT_EQ(a.indices.size(), 5u);
    EXPECT_TRUE(std::is_sorted(a.indices.begin(), a.indices.end()));
}

TEST(SplitTest, FoldsAreDisjointAndWarningsIssued) {
    const MomentSample s = shifted_sample(200, 30, {}, 9);
    const DominantTestSpec spec = calibrate(default_spec(10, 0.05), 100000, 1);
    const auto res = split_test(s, 10, make_selector(SelectionRule::top), spec, TestOptions{}, 0.5, 4);
    IndexSet common;
    std::set_intersection(res.fold1.begin(), res.fold1.end(), res.fold2.begin(), res.fold2.end(),
                          std::back_inserter(common));
    EXPECT_TRUE(common.empty());
    EXPECT_EQ(res.fold1.size() + res.fold2.size(), 200u);
    EXPECT_EQ(res.report.n, 100);
    EXPECT_EQ(res.report.d, 10);
    EXPECT_FALSE(res.warnings.empty());  // 10 > 100^(2/5)
    EXPECT_NO_THROW(res.to_json().dump());
}

TEST(SplitTest, FullSelectionEqualsFoldTwoTest) {
    const MomentSample s = shifted_sample(400, 8, {{2, 2.0}}, 10);
    const DominantTestSpec spec = calibrate(default_spec(8, 0.05), 50000, 2);
    const auto res = split_test(s, 8, make_selector(SelectionRule::greedy), spec, TestOptions{}, 0.5, 6);
    IndexSet all(8);
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    EXPECT_EQ(res.selection.indices, all);
    const TestReport direct = run_tests(s.rows(res.fold2), spec, TestOptions{});
    EXPECT_EQ(res.report.to_json(), direct.to_json());
}

TEST(SplitTest, ExternalIndexList) {
    const MomentSample s = shifted_sample(200, 30, {}, 11);
    const DominantTestSpec spec = calibrate(default_spec(3, 0.05), 50000, 3);
    const auto res = split_test(s, 3, fixed_selector({20, 4, 9}), spec, TestOptions{}, 0.5, 1);
    EXPECT_EQ(res.selection.indices, (IndexSet{4, 9, 20}));
    EXPECT_THROW(split_test(s, 3, fixed_selector({1, 2}), spec, TestOptions{}, 0.5, 1), std::invalid_argument);
    EXPECT_THROW(split_test(s, 3, fixed_selector({1, 2, 99}), spec, TestOptions{}, 0.5, 1), std::out_of_range);
}
