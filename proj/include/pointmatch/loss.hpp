#pragma once

#include <cmath>
#include <vector>

#include "pointmatch/core.hpp"
#include "pointmatch/metrics.hpp"

namespace pointmatch {

// Smooth-L1 between two points: 0.5 * ||d||_2^2 when ||d||_1 < 1, else
// ||d||_1 - 0.5. The branch condition uses the L1 norm, the quadratic branch
// the squared L2 norm.
inline double smooth_l1(const Point& p, const Point& q) {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    const double l1 = std::abs(dx) + std::abs(dy);
    if (l1 < 1.0) return 0.5 * (dx * dx + dy * dy);
    return l1 - 0.5;
}

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct SmoothL1Eval {
    double value = 0.0;
    Vec2 grad;  // d value / d q
};

inline SmoothL1Eval smooth_l1_eval(const Point& p, const Point& q) {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    const double l1 = std::abs(dx) + std::abs(dy);
    SmoothL1Eval out;
    if (l1 < 1.0) {
        out.value = 0.5 * (dx * dx + dy * dy);
        out.grad = {dx, dy};
    } else {
        out.value = l1 - 0.5;
        out.grad = {sign(dx), sign(dy)};  // subgradient 0 on a zero component
    }
    return out;
}

struct Hsl1Eval {
    double value = 0.0;
    std::vector<Vec2> grads;  // per matched point, d value / d matched point
};

inline Hsl1Eval hsl1_eval(const PointSet& gt, const std::vector<Point>& matched) {
    if (gt.empty()) throw InvalidInput("regression loss needs at least one ground-truth point");
    if (gt.size() != matched.size())
        throw LengthMismatch("matched point list length " + std::to_string(matched.size()) +
                             " != ground-truth count " + std::to_string(gt.size()));
    const double n = static_cast<double>(gt.size());
    Hsl1Eval out;
    out.grads.resize(matched.size());
    for (std::size_t i = 0; i < matched.size(); ++i) {
        const SmoothL1Eval s = smooth_l1_eval(gt.points[i], matched[i]);
        out.value += std::log(s.value + 1.0);
        const double scale = 1.0 / (n * (s.value + 1.0));
        out.grads[i] = {scale * s.grad.x, scale * s.grad.y};
    }
    out.value /= n;
    return out;
}

inline double clamp_confidence(double t, double clamp) {
    return std::min(std::max(t, clamp), 1.0 - clamp);
}

struct WceEval {
    double value = 0.0;
    std::vector<double> grads;  // per proposal, d value / d confidence
};

// Weighted cross entropy over matched/unmatched proposals, both sums
// normalized by the matched count. Standard mode scores unmatched proposals
// with log(1 - t); literal mode scores them with (1 - log t). Confidences are
// clamped to [clamp, 1-clamp] inside the logarithms only, and the gradient is
// zero wherever the clamp is active.
inline WceEval wce_eval(const Matching& matching, const ProposalSet& pred, double alpha,
                        WceMode mode, double clamp) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidAlpha("alpha must be in [0, 1]");
    if (!(clamp > 0.0 && clamp < 0.5)) throw InvalidInput("clamp must be in (0, 0.5)");
    validate_matching(matching, matching.assignment.size(), pred.size());
    if (matching.assignment.empty()) throw InvalidInput("classification loss needs at least one matched proposal");

    const double n = static_cast<double>(matching.assignment.size());
    WceEval out;
    out.grads.assign(pred.size(), 0.0);

    for (int j : matching.assignment) {
        const double t = pred.proposals[j].confidence;
        const double tc = clamp_confidence(t, clamp);
        out.value += -alpha * std::log(tc) / n;
        if (t > clamp && t < 1.0 - clamp) out.grads[j] = -alpha / (n * tc);
    }
    for (int j : matching.unmatched) {
        const double t = pred.proposals[j].confidence;
        const double tc = clamp_confidence(t, clamp);
        const bool inner = (t > clamp && t < 1.0 - clamp);
        if (mode == WceMode::Standard) {
            out.value += -(1.0 - alpha) * std::log(1.0 - tc) / n;
            if (inner) out.grads[j] = (1.0 - alpha) / (n * (1.0 - tc));
        } else {
            out.value += -(1.0 - alpha) * (1.0 - std::log(tc)) / n;
            if (inner) out.grads[j] = (1.0 - alpha) / (n * tc);
        }
    }
    return out;
}

struct HrcEval {
    double value = 0.0;
    double grad_m = 0.0;  // d value / d effective count
};

inline HrcEval hrc_eval(double n, double m_eff, double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
    if (n < 0.0 || m_eff < 0.0) throw InvalidInput("counts must be nonnegative");
    const double u = m_eff - n;
    const double a = std::abs(u);
    const double r = a / (n + epsilon);
    HrcEval out;
    out.value = a * std::log(r + 1.0);
    // subgradient 0 at m_eff == n
    out.grad_m = sign(u) * (std::log(r + 1.0) + r / (r + 1.0));
    return out;
}

}  // namespace detail

/// Mean log-damped smooth-L1 over matched pairs: (1/N) sum log(s_i + 1).
inline double hsl1_regression_loss(const PointSet& gt, const std::vector<Point>& matched) {
    return detail::hsl1_eval(gt, matched).value;
}

inline double wce_classification_loss(const Matching& matching, const ProposalSet& pred,
                                      double alpha, WceMode mode = WceMode::Standard,
                                      double clamp = 1e-7) {
    return detail::wce_eval(matching, pred, alpha, mode, clamp).value;
}

/// Count loss |M - N| * log(|M - N| / (N + eps) + 1). `m_eff` is the
/// effective predicted count (hard thresholded or the soft confidence sum).
inline double hrc_count_loss(double n, double m_eff, double epsilon) {
    return detail::hrc_eval(n, m_eff, epsilon).value;
}

/// Effective predicted count used by the count loss under the given config.
inline double effective_count(const ProposalSet& pred, const LossConfig& cfg) {
    if (cfg.hrc_count_mode == HrcCountMode::Soft) return soft_count(pred);
    return static_cast<double>(count_from_proposals(pred, cfg.count_threshold));
}

/// Three-component loss: total = lambda1 * l_cls + lambda2 * l_reg + lambda3 * l_cou,
/// with analytic gradients. The matching is treated as a constant: coordinate
/// gradients flow through the regression term for matched proposals only, and
/// confidence gradients flow through the classification term for all proposals
/// plus the count term in soft-count mode (hard mode contributes no gradient).
inline LossReport ttc_total(const PointSet& gt, const ProposalSet& pred, const Matching& matching,
                            const LossConfig& cfg) {
    cfg.validate();
    validate_matching(matching, gt.size(), pred.size());

    std::vector<Point> matched;
    matched.reserve(matching.assignment.size());
    for (int j : matching.assignment) matched.push_back(pred.proposals[j].point);

    const detail::Hsl1Eval reg = detail::hsl1_eval(gt, matched);
    const detail::WceEval cls = detail::wce_eval(matching, pred, cfg.alpha, cfg.wce_mode, cfg.confidence_clamp);
    const double m_eff = effective_count(pred, cfg);
    const detail::HrcEval cou = detail::hrc_eval(static_cast<double>(gt.size()), m_eff, cfg.epsilon);

    LossReport report;
    report.l_reg = reg.value;
    report.l_cls = cls.value;
    report.l_cou = cou.value;
    report.total = cfg.lambda1 * cls.value + cfg.lambda2 * reg.value + cfg.lambda3 * cou.value;

    report.grad_coords.assign(pred.size(), Vec2{});
    for (std::size_t i = 0; i < matching.assignment.size(); ++i) {
        const int j = matching.assignment[i];
        report.grad_coords[j] = {cfg.lambda2 * reg.grads[i].x, cfg.lambda2 * reg.grads[i].y};
    }

    report.grad_conf.assign(pred.size(), 0.0);
    for (std::size_t j = 0; j < pred.size(); ++j) {
        double g = cfg.lambda1 * cls.grads[j];
        if (cfg.hrc_count_mode == HrcCountMode::Soft) g += cfg.lambda3 * cou.grad_m;
        report.grad_conf[j] = g;
    }
    return report;
}

}  // namespace pointmatch
