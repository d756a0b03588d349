#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pointmatch/gradcheck.hpp"
#include "pointmatch/loss.hpp"
#include "pointmatch/rng.hpp"
#include "testutil.hpp"

namespace pm = pointmatch;

namespace {

// Frozen to 20 significant digits.
constexpr double kLn1_065 = 0.06297479916138843527;
constexpr double kLn7_5 = 2.0149030205422647566;
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kTenLn1_1 = 0.95310179804324860044;

TEST(SmoothL1, BranchValues) {
    // ||d||_1 = 0.5 < 1: quadratic branch, 0.5 * ||d||_2^2
    EXPECT_DOUBLE_EQ(pm::smooth_l1({0.0, 0.0}, {0.3, 0.2}), 0.065);
    // ||d||_1 = 7 >= 1: linear branch, ||d||_1 - 0.5
    EXPECT_DOUBLE_EQ(pm::smooth_l1({0.0, 0.0}, {3.0, 4.0}), 6.5);
    // exactly at the branch point the linear branch applies
    EXPECT_DOUBLE_EQ(pm::smooth_l1({0.0, 0.0}, {0.5, 0.5}), 0.5);
    EXPECT_DOUBLE_EQ(pm::smooth_l1({1.0, 1.0}, {1.0, 1.0}), 0.0);
}

TEST(Hsl1, SinglePairSpotValues) {
    pm::PointSet gt;
    gt.points = {{0.0, 0.0}};
    EXPECT_NEAR(pm::hsl1_regression_loss(gt, {{0.3, 0.2}}), kLn1_065, 1e-15);
    EXPECT_NEAR(pm::hsl1_regression_loss(gt, {{3.0, 4.0}}), kLn7_5, 1e-15);
    EXPECT_DOUBLE_EQ(pm::hsl1_regression_loss(gt, {{0.0, 0.0}}), 0.0);
}

TEST(Hsl1, InputValidation) {
    pm::PointSet gt;
    EXPECT_THROW(pm::hsl1_regression_loss(gt, {}), pm::InvalidInput);
    gt.points = {{0.0, 0.0}};
    EXPECT_THROW(pm::hsl1_regression_loss(gt, {{1.0, 1.0}, {2.0, 2.0}}), pm::LengthMismatch);
}

TEST(Hsl1, NeverExceedsMeanSmoothL1) {
    // log(1 + s) <= s
    pm::Rng rng = pm::make_rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 10));
        const pm::PointSet gt = testutil::random_points(rng, n, 30.0);
        std::vector<pm::Point> matched;
        for (int i = 0; i < n; ++i)
            matched.push_back({pm::uniform_range(rng, 0.0, 30.0), pm::uniform_range(rng, 0.0, 30.0)});

        double mean_sl1 = 0.0;
        for (int i = 0; i < n; ++i) mean_sl1 += pm::smooth_l1(gt.points[i], matched[i]) / n;
        ASSERT_LE(pm::hsl1_regression_loss(gt, matched), mean_sl1 + 1e-12);
    }
}

TEST(Hsl1, TranslationInvariant) {
    pm::Rng rng = pm::make_rng(808);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 8));
        const pm::PointSet gt = testutil::random_points(rng, n, 20.0);
        std::vector<pm::Point> matched;
        for (int i = 0; i < n; ++i)
            matched.push_back({pm::uniform_range(rng, 0.0, 20.0), pm::uniform_range(rng, 0.0, 20.0)});

        const double tx = pm::uniform_range(rng, -500.0, 500.0);
        const double ty = pm::uniform_range(rng, -500.0, 500.0);
        pm::PointSet gt_shift = gt;
        std::vector<pm::Point> matched_shift = matched;
        for (auto& p : gt_shift.points) { p.x += tx; p.y += ty; }
        for (auto& p : matched_shift) { p.x += tx; p.y += ty; }

        const double a = pm::hsl1_regression_loss(gt, matched);
        const double b = pm::hsl1_regression_loss(gt_shift, matched_shift);
        ASSERT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST(Wce, SymmetricSpotValueIsLn2) {
    // N=1, M=2, both confidences 0.5, alpha=0.5:
    // -(0.5*log 0.5 + 0.5*log 0.5) = log 2
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 0.5}, {{1.0, 1.0}, 0.5}};
    pm::Matching m;
    m.assignment = {0};
    m.unmatched = {1};
    EXPECT_NEAR(pm::wce_classification_loss(m, pred, 0.5), kLn2, 1e-15);
}

TEST(Wce, LiteralModeUnmatchedTerm) {
    // literal: -(1-alpha) * (1 - log t) for unmatched; at t=0.5, alpha=0.5
    // the two terms cancel to exactly -1/2
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 0.5}, {{1.0, 1.0}, 0.5}};
    pm::Matching m;
    m.assignment = {0};
    m.unmatched = {1};
    EXPECT_NEAR(pm::wce_classification_loss(m, pred, 0.5, pm::WceMode::Literal), -0.5, 1e-15);
}

TEST(Wce, LiteralModeIsUnboundedBelowInConfidence) {
    // Lowering an unmatched confidence toward 0 keeps lowering the literal
    // loss without bound (the -ln t term flips sign), while the standard
    // form is a sum of nonnegative terms.
    const auto at_conf = [](double t, pm::WceMode mode) {
        pm::ProposalSet pred;
        pred.proposals = {{{0.0, 0.0}, 0.5}, {{1.0, 1.0}, t}};
        pm::Matching m;
        m.assignment = {0};
        m.unmatched = {1};
        return pm::wce_classification_loss(m, pred, 0.5, mode);
    };
    const double lit_tiny = at_conf(1e-4, pm::WceMode::Literal);
    const double lit_low = at_conf(0.2, pm::WceMode::Literal);
    const double lit_high = at_conf(0.95, pm::WceMode::Literal);
    EXPECT_LT(lit_tiny, lit_low);
    EXPECT_LT(lit_low, lit_high);
    EXPECT_LT(lit_low, 0.0);  // already negative well away from the clamp
    for (const double t : {1e-4, 0.2, 0.95})
        EXPECT_GE(at_conf(t, pm::WceMode::Standard), 0.0);
}

TEST(Wce, ClampKeepsExtremesFinite) {
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 1.0}, {{1.0, 1.0}, 0.0}, {{2.0, 2.0}, 1.0}};
    pm::Matching m;
    m.assignment = {0};
    m.unmatched = {1, 2};
    const double v = pm::wce_classification_loss(m, pred, 0.5);
    EXPECT_TRUE(std::isfinite(v));
    // gradients vanish where the clamp is active
    const auto eval = pm::detail::wce_eval(m, pred, 0.5, pm::WceMode::Standard, 1e-7);
    EXPECT_DOUBLE_EQ(eval.grads[0], 0.0);
    EXPECT_DOUBLE_EQ(eval.grads[1], 0.0);
    EXPECT_DOUBLE_EQ(eval.grads[2], 0.0);
}

TEST(Wce, InputValidation) {
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 0.5}};
    pm::Matching m;
    m.assignment = {0};
    EXPECT_THROW(pm::wce_classification_loss(m, pred, 1.5), pm::InvalidAlpha);
    EXPECT_THROW(pm::wce_classification_loss(m, pred, -0.1), pm::InvalidAlpha);
    EXPECT_THROW(pm::wce_classification_loss(m, pred, 0.5, pm::WceMode::Standard, 0.7),
                 pm::InvalidInput);

    pm::Matching empty;
    empty.unmatched = {0};
    EXPECT_THROW(pm::wce_classification_loss(empty, pred, 0.5), pm::InvalidInput);
}

TEST(Hrc, SpotValue) {
    // |110-100| * log(10/(100+eps) + 1) ~= 10 * log(1.1)
    EXPECT_NEAR(pm::hrc_count_loss(100.0, 110.0, 1e-8), kTenLn1_1, 1e-9);
}

TEST(Hrc, ZeroIffEqualAndSymmetric) {
    EXPECT_DOUBLE_EQ(pm::hrc_count_loss(50.0, 50.0, 1e-8), 0.0);
    pm::Rng rng = pm::make_rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const double n = std::floor(pm::uniform_range(rng, 1.0, 200.0));
        const double d = std::floor(pm::uniform_range(rng, 1.0, n));
        ASSERT_GT(pm::hrc_count_loss(n, n + d, 1e-8), 0.0);
        ASSERT_EQ(pm::hrc_count_loss(n, n + d, 1e-8), pm::hrc_count_loss(n, n - d, 1e-8));
        ASSERT_DOUBLE_EQ(pm::hrc_count_loss(n, n, 1e-8), 0.0);
    }
}

TEST(Hrc, GrowsSuperlinearlyInTheGap) {
    // value/|u| = log(r+1) grows with |u|, so doubling the gap more than
    // doubles the loss
    const double n = 100.0;
    EXPECT_GT(pm::hrc_count_loss(n, n + 20.0, 1e-8), 2.0 * pm::hrc_count_loss(n, n + 10.0, 1e-8));
}

TEST(Hrc, InputValidation) {
    EXPECT_THROW(pm::hrc_count_loss(10.0, 12.0, 0.0), pm::InvalidInput);
    EXPECT_THROW(pm::hrc_count_loss(10.0, 12.0, -1e-9), pm::InvalidInput);
    EXPECT_THROW(pm::hrc_count_loss(-1.0, 12.0, 1e-8), pm::InvalidInput);
    EXPECT_THROW(pm::hrc_count_loss(10.0, -2.0, 1e-8), pm::InvalidInput);
}

TEST(EffectiveCount, FollowsConfigMode) {
    pm::ProposalSet pred;
    pred.proposals = {{{0.0, 0.0}, 0.6}, {{1.0, 1.0}, 0.4}, {{2.0, 2.0}, 0.5}};
    pm::LossConfig cfg;
    cfg.hrc_count_mode = pm::HrcCountMode::Soft;
    EXPECT_DOUBLE_EQ(pm::effective_count(pred, cfg), 1.5);
    cfg.hrc_count_mode = pm::HrcCountMode::Hard;
    EXPECT_DOUBLE_EQ(pm::effective_count(pred, cfg), 2.0);  // 0.6 and 0.5 pass tau=0.5
}

TEST(Ttc, CompositeSpotValue) {
    // l_reg = log(1.065), l_cls = log 2, soft count == N gives l_cou = 0
    pm::PointSet gt;
    gt.points = {{0.0, 0.0}};
    pm::ProposalSet pred;
    pred.proposals = {{{0.3, 0.2}, 0.5}, {{5.0, 5.0}, 0.5}};
    pm::Matching m;
    m.assignment = {0};
    m.unmatched = {1};
    const pm::LossConfig cfg;
    const pm::LossReport r = pm::ttc_total(gt, pred, m, cfg);
    EXPECT_NEAR(r.l_reg, kLn1_065, 1e-15);
    EXPECT_NEAR(r.l_cls, kLn2, 1e-15);
    EXPECT_DOUBLE_EQ(r.l_cou, 0.0);
    EXPECT_NEAR(r.total, 0.75612197972133374, 1e-9);
}

TEST(Ttc, LambdaCompositionIsExact) {
    pm::Rng rng = pm::make_rng(606060);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 6));
        const int m = n + static_cast<int>(pm::uniform_index(rng, 5));
        const testutil::GradInstance inst = testutil::nonkink_instance(rng, n, m);

        pm::LossConfig cfg;
        cfg.lambda1 = pm::uniform_range(rng, 0.0, 3.0);
        cfg.lambda2 = pm::uniform_range(rng, 0.0, 3.0);
        cfg.lambda3 = pm::uniform_range(rng, 0.0, 3.0);
        const pm::LossReport r = pm::ttc_total(inst.gt, inst.pred, inst.matching, cfg);
        ASSERT_DOUBLE_EQ(r.total, cfg.lambda1 * r.l_cls + cfg.lambda2 * r.l_reg + cfg.lambda3 * r.l_cou);
    }
}

TEST(Ttc, FixedPointHasNoGradient) {
    // proposal sitting on the point with confidence at the upper clamp:
    // nothing moves and the loss is ~0
    const pm::LossConfig cfg;
    pm::PointSet gt;
    gt.points = {{5.0, 5.0}};
    pm::ProposalSet pred;
    pred.proposals = {{{5.0, 5.0}, 1.0 - cfg.confidence_clamp}};
    pm::Matching m;
    m.assignment = {0};

    const pm::LossReport r = pm::ttc_total(gt, pred, m, cfg);
    EXPECT_DOUBLE_EQ(r.grad_coords[0].x, 0.0);
    EXPECT_DOUBLE_EQ(r.grad_coords[0].y, 0.0);
    EXPECT_DOUBLE_EQ(r.l_reg, 0.0);
    EXPECT_LT(std::abs(r.total), 1e-6);
    EXPECT_LT(std::abs(r.grad_conf[0]), 1e-6);
}

TEST(Ttc, MatchingPermutationInvariance) {
    // permuting the ground-truth order (and the assignment with it) does not
    // change any loss value
    pm::Rng rng = pm::make_rng(2222);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(pm::uniform_index(rng, 5));
        const int m = n + static_cast<int>(pm::uniform_index(rng, 4));
        const testutil::GradInstance inst = testutil::nonkink_instance(rng, n, m);

        pm::PointSet gt_rev;
        pm::Matching match_rev;
        for (int i = n - 1; i >= 0; --i) {
            gt_rev.points.push_back(inst.gt.points[i]);
            match_rev.assignment.push_back(inst.matching.assignment[i]);
        }
        match_rev.unmatched = inst.matching.unmatched;

        const pm::LossConfig cfg;
        const pm::LossReport a = pm::ttc_total(inst.gt, inst.pred, inst.matching, cfg);
        const pm::LossReport b = pm::ttc_total(gt_rev, inst.pred, match_rev, cfg);
        ASSERT_NEAR(a.total, b.total, 1e-12 * std::max(1.0, std::abs(a.total)));
        ASSERT_NEAR(a.l_reg, b.l_reg, 1e-12);
        ASSERT_NEAR(a.l_cls, b.l_cls, 1e-12);
        ASSERT_DOUBLE_EQ(a.l_cou, b.l_cou);
    }
}

// ------------------------------------------------- finite-difference checks

TEST(GradCheck, Hsl1) {
    pm::Rng rng = pm::make_rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 5));
        const int m = n + static_cast<int>(pm::uniform_index(rng, 4));
        const testutil::GradInstance inst = testutil::nonkink_instance(rng, n, m);

        std::vector<pm::Point> matched;
        for (int j : inst.matching.assignment) matched.push_back(inst.pred.proposals[j].point);
        const auto eval = pm::detail::hsl1_eval(inst.gt, matched);

        const auto numeric = pm::finite_diff_gradient(
            [&](const pm::ProposalSet& p) {
                std::vector<pm::Point> mp;
                for (int j : inst.matching.assignment) mp.push_back(p.proposals[j].point);
                return pm::hsl1_regression_loss(inst.gt, mp);
            },
            inst.pred, 1e-6);

        std::vector<pm::Vec2> analytic(m);
        for (int i = 0; i < n; ++i) analytic[inst.matching.assignment[i]] = eval.grads[i];
        for (int j = 0; j < m; ++j) {
            ASSERT_LT(testutil::grad_rel_err(analytic[j].x, numeric.coords[j].x), 1e-5);
            ASSERT_LT(testutil::grad_rel_err(analytic[j].y, numeric.coords[j].y), 1e-5);
        }
    }
}

TEST(GradCheck, WceBothModes) {
    pm::Rng rng = pm::make_rng(12);
    for (const pm::WceMode mode : {pm::WceMode::Standard, pm::WceMode::Literal}) {
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 1 + static_cast<int>(pm::uniform_index(rng, 5));
            const int m = n + static_cast<int>(pm::uniform_index(rng, 4));
            const testutil::GradInstance inst = testutil::nonkink_instance(rng, n, m);
            const double alpha = pm::uniform_range(rng, 0.1, 0.9);

            const auto eval = pm::detail::wce_eval(inst.matching, inst.pred, alpha, mode, 1e-7);
            const auto numeric = pm::finite_diff_gradient(
                [&](const pm::ProposalSet& p) {
                    return pm::wce_classification_loss(inst.matching, p, alpha, mode);
                },
                inst.pred, 1e-6);
            for (int j = 0; j < m; ++j)
                ASSERT_LT(testutil::grad_rel_err(eval.grads[j], numeric.conf[j]), 1e-5);
        }
    }
}

TEST(GradCheck, HrcSoftCount) {
    pm::Rng rng = pm::make_rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 6));
        const int m = n + 1 + static_cast<int>(pm::uniform_index(rng, 5));
        const testutil::GradInstance inst = testutil::nonkink_instance(rng, n, m);

        const auto eval = pm::detail::hrc_eval(n, pm::soft_count(inst.pred), 1e-8);
        const auto numeric = pm::finite_diff_gradient(
            [&](const pm::ProposalSet& p) {
                return pm::hrc_count_loss(n, pm::soft_count(p), 1e-8);
            },
            inst.pred, 1e-6);
        // d soft_count / d t_j = 1, so every confidence sees grad_m
        for (int j = 0; j < m; ++j)
            ASSERT_LT(testutil::grad_rel_err(eval.grad_m, numeric.conf[j]), 1e-5);
    }
}

TEST(GradCheck, TtcTotalWithWeights) {
    pm::Rng rng = pm::make_rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + static_cast<int>(pm::uniform_index(rng, 5));
        const int m = n + static_cast<int>(pm::uniform_index(rng, 4));
        const testutil::GradInstance inst = testutil::nonkink_instance(rng, n, m);

        pm::LossConfig cfg;
        cfg.lambda1 = pm::uniform_range(rng, 0.3, 2.0);
        cfg.lambda2 = pm::uniform_range(rng, 0.3, 2.0);
        cfg.lambda3 = pm::uniform_range(rng, 0.3, 2.0);

        const pm::LossReport r = pm::ttc_total(inst.gt, inst.pred, inst.matching, cfg);
        const auto numeric = pm::finite_diff_gradient(
            [&](const pm::ProposalSet& p) {
                return pm::ttc_total(inst.gt, p, inst.matching, cfg).total;
            },
            inst.pred, 1e-6);
        for (int j = 0; j < m; ++j) {
            ASSERT_LT(testutil::grad_rel_err(r.grad_coords[j].x, numeric.coords[j].x), 1e-5);
            ASSERT_LT(testutil::grad_rel_err(r.grad_coords[j].y, numeric.coords[j].y), 1e-5);
            ASSERT_LT(testutil::grad_rel_err(r.grad_conf[j], numeric.conf[j]), 1e-5);
        }
    }
}

}  // namespace
