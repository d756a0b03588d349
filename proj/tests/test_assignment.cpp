#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pointmatch/assignment.hpp"
#include "pointmatch/rng.hpp"
#include "testutil.hpp"

namespace pm = pointmatch;

namespace {

TEST(CostMatrix, SinglePairValues) {
    pm::PointSet gt;
    gt.points = {{0.0, 0.0}};
    pm::ProposalSet pred;
    pred.proposals = {{{3.0, 4.0}, 0.5}};

    // gamma * 5 - 0.5
    const pm::CostMatrix c1 = pm::build_cost_matrix(gt, pred, 1.0);
    ASSERT_EQ(c1.rows, 1);
    ASSERT_EQ(c1.cols, 1);
    EXPECT_DOUBLE_EQ(c1.at(0, 0), 4.5);

    const pm::CostMatrix c2 = pm::build_cost_matrix(gt, pred, 0.1);
    EXPECT_NEAR(c2.at(0, 0), 0.0, 1e-15);
}

TEST(CostMatrix, NegativeEntriesAreLegal) {
    pm::PointSet gt;
    gt.points = {{0.0, 0.0}};
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 1.0}};
    const pm::CostMatrix c = pm::build_cost_matrix(gt, pred, 0.05);
    EXPECT_DOUBLE_EQ(c.at(0, 0), -1.0);
}

TEST(CostMatrix, InputValidation) {
    pm::PointSet gt;
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 0.5}};
    EXPECT_THROW(pm::build_cost_matrix(gt, pred, 0.05), pm::InvalidInput);  // N < 1

    gt.points = {{0.0, 0.0}, {1.0, 1.0}};
    EXPECT_THROW(pm::build_cost_matrix(gt, pred, 0.05), pm::CountMismatch);  // N > M

    pred.proposals.push_back({{2.0, 2.0}, 0.5});
    EXPECT_THROW(pm::build_cost_matrix(gt, pred, 0.0), pm::InvalidInput);
    EXPECT_THROW(pm::build_cost_matrix(gt, pred, -1.0), pm::InvalidInput);

    pred.proposals[0].confidence = 1.5;
    EXPECT_THROW(pm::build_cost_matrix(gt, pred, 0.05), pm::InvalidInput);
}

TEST(Hungarian, KnownTwoByTwo) {
    pm::CostMatrix cost;
    cost.rows = 2;
    cost.cols = 2;
    cost.entries = {1.0, 2.0,
                    2.0, 4.0};
    const pm::Matching m = pm::hungarian_match(cost);
    // 2 + 2 = 4 beats 1 + 4 = 5
    EXPECT_EQ(m.assignment, (std::vector<int>{1, 0}));
    EXPECT_TRUE(m.unmatched.empty());
    EXPECT_DOUBLE_EQ(pm::matching_cost(cost, m), 4.0);
}

TEST(Hungarian, RectangularPicksCheapColumn) {
    pm::CostMatrix cost;
    cost.rows = 1;
    cost.cols = 3;
    cost.entries = {2.0, -1.5, 0.25};
    const pm::Matching m = pm::hungarian_match(cost);
    EXPECT_EQ(m.assignment, (std::vector<int>{1}));
    EXPECT_EQ(m.unmatched, (std::vector<int>{0, 2}));
}

TEST(Hungarian, MatchesBruteForceOnDyadicCosts) {
    pm::Rng rng = pm::make_rng(20240811);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 6));
        const int m = n + static_cast<int>(pm::uniform_index(rng, 8 - n + 1));
        const pm::CostMatrix cost = testutil::dyadic_cost_matrix(rng, n, m);

        const pm::Matching fast = pm::hungarian_match(cost);
        const pm::Matching slow = pm::brute_force_match(cost);
        ASSERT_TRUE(pm::is_valid_matching(fast, n, m));
        ASSERT_TRUE(pm::is_valid_matching(slow, n, m));
        // dyadic-grid entries make both totals exact, so compare with ==
        ASSERT_EQ(pm::matching_cost(cost, fast), pm::matching_cost(cost, slow))
            << "trial " << trial << " n=" << n << " m=" << m;
    }
}

TEST(Hungarian, Deterministic) {
    pm::Rng rng = pm::make_rng(7);
    const pm::CostMatrix cost = testutil::dyadic_cost_matrix(rng, 5, 7);
    const pm::Matching a = pm::hungarian_match(cost);
    const pm::Matching b = pm::hungarian_match(cost);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.unmatched, b.unmatched);
}

TEST(Hungarian, RowPermutationKeepsTotal) {
    pm::Rng rng = pm::make_rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(pm::uniform_index(rng, 5));
        const int m = n + static_cast<int>(pm::uniform_index(rng, 3));
        const pm::CostMatrix cost = testutil::dyadic_cost_matrix(rng, n, m);

        pm::CostMatrix reversed = cost;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) reversed.at(i, j) = cost.at(n - 1 - i, j);

        const double t1 = pm::matching_cost(cost, pm::hungarian_match(cost));
        const double t2 = pm::matching_cost(reversed, pm::hungarian_match(reversed));
        ASSERT_EQ(t1, t2);
    }
}

TEST(BruteForce, SizeBounds) {
    pm::Rng rng = pm::make_rng(3);
    EXPECT_NO_THROW(pm::brute_force_match(testutil::dyadic_cost_matrix(rng, 8, 10)));
    EXPECT_THROW(pm::brute_force_match(testutil::dyadic_cost_matrix(rng, 9, 10)), pm::TooLarge);
    EXPECT_THROW(pm::brute_force_match(testutil::dyadic_cost_matrix(rng, 8, 11)), pm::TooLarge);
}

TEST(MatchPoints, ConfidenceBreaksDistanceTies) {
    pm::PointSet gt;
    gt.points = {{0.0, 0.0}};
    pm::ProposalSet pred;
    pred.proposals = {{{1.0, 0.0}, 0.2}, {{-1.0, 0.0}, 0.9}};
    const pm::LossConfig cfg;  // gamma = 0.05
    const pm::Matching m = pm::match_points(gt, pred, cfg);
    EXPECT_EQ(m.assignment, (std::vector<int>{1}));
    EXPECT_EQ(m.unmatched, (std::vector<int>{0}));
}

TEST(MatchPoints, PrefersNearbyProposalsAtEqualConfidence) {
    pm::PointSet gt;
    gt.points = {{10.0, 10.0}, {30.0, 10.0}};
    pm::ProposalSet pred;
    pred.proposals = {{{29.0, 10.0}, 0.5}, {{11.0, 10.0}, 0.5}, {{50.0, 50.0}, 0.5}};
    const pm::LossConfig cfg;
    const pm::Matching m = pm::match_points(gt, pred, cfg);
    EXPECT_EQ(m.assignment, (std::vector<int>{1, 0}));
    EXPECT_EQ(m.unmatched, (std::vector<int>{2}));
}

TEST(MatchingCost, SumsSelectedEntries) {
    pm::CostMatrix cost;
    cost.rows = 2;
    cost.cols = 3;
    cost.entries = {0.5, -1.0, 2.0,
                    1.5, 0.25, -0.75};
    pm::Matching m;
    m.assignment = {1, 2};
    m.unmatched = {0};
    EXPECT_DOUBLE_EQ(pm::matching_cost(cost, m), -1.75);
}

}  // namespace
