#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pointmatch/assignment.hpp"
#include "pointmatch/core.hpp"
#include "pointmatch/loss.hpp"
#include "pointmatch/metrics.hpp"
#include "pointmatch/parallel.hpp"
#include "pointmatch/rng.hpp"
#include "pointmatch/synth.hpp"

namespace pointmatch {

// ------------------------------------------------------- loss variants

enum class RegressionLoss { MSE, SmoothL1, HSL1 };
enum class ClassificationLoss { CE, WCE };
enum class CountingLoss { None, MAE, HRC };

/// One row of the loss-ablation grid.
struct LossVariant {
    RegressionLoss regression = RegressionLoss::HSL1;
    ClassificationLoss classification = ClassificationLoss::WCE;
    CountingLoss counting = CountingLoss::HRC;

    std::string name() const {
        std::string s;
        switch (regression) {
            case RegressionLoss::MSE: s += "mse"; break;
            case RegressionLoss::SmoothL1: s += "smoothl1"; break;
            case RegressionLoss::HSL1: s += "hsl1"; break;
        }
        s += '+';
        s += classification == ClassificationLoss::CE ? "ce" : "wce";
        s += '+';
        switch (counting) {
            case CountingLoss::None: s += "none"; break;
            case CountingLoss::MAE: s += "mae"; break;
            case CountingLoss::HRC: s += "hrc"; break;
        }
        return s;
    }

    bool operator==(const LossVariant&) const = default;
};

/// The ten ablation rows, in their canonical order (index 0 = ID1).
inline std::vector<LossVariant> default_variant_grid() {
    using R = RegressionLoss;
    using C = ClassificationLoss;
    using K = CountingLoss;
    return {
        {R::MSE, C::CE, K::None},      // ID1: the common detection baseline
        {R::MSE, C::CE, K::MAE},       // ID2: baseline with a plain count term
        {R::HSL1, C::CE, K::MAE},      // ID3
        {R::MSE, C::WCE, K::MAE},      // ID4
        {R::MSE, C::CE, K::HRC},       // ID5
        {R::HSL1, C::WCE, K::MAE},     // ID6
        {R::HSL1, C::CE, K::HRC},      // ID7
        {R::MSE, C::WCE, K::HRC},      // ID8
        {R::SmoothL1, C::WCE, K::HRC}, // ID9
        {R::HSL1, C::WCE, K::HRC},     // ID10: the full combination
    };
}

/// Accepts grid ids ("id3", case-insensitive) or explicit triples
/// ("hsl1+wce+hrc"). Throws ValidationError on anything else.
inline LossVariant parse_variant(const std::string& text) {
    std::string s;
    s.reserve(text.size());
    for (char c : text) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    if (s.size() >= 3 && s.compare(0, 2, "id") == 0) {
        const auto grid = default_variant_grid();
        int id = 0;
        for (std::size_t i = 2; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw ValidationError("unknown loss variant: " + text);
            id = id * 10 + (s[i] - '0');
        }
        if (id < 1 || id > static_cast<int>(grid.size()))
            throw ValidationError("loss variant id out of range: " + text);
        return grid[id - 1];
    }

    const auto plus1 = s.find('+');
    const auto plus2 = s.find('+', plus1 == std::string::npos ? plus1 : plus1 + 1);
    if (plus1 == std::string::npos || plus2 == std::string::npos)
        throw ValidationError("unknown loss variant: " + text);
    const std::string reg = s.substr(0, plus1);
    const std::string cls = s.substr(plus1 + 1, plus2 - plus1 - 1);
    const std::string cou = s.substr(plus2 + 1);

    LossVariant v;
    if (reg == "mse") v.regression = RegressionLoss::MSE;
    else if (reg == "smoothl1") v.regression = RegressionLoss::SmoothL1;
    else if (reg == "hsl1") v.regression = RegressionLoss::HSL1;
    else throw ValidationError("unknown regression loss: " + text);
    if (cls == "ce") v.classification = ClassificationLoss::CE;
    else if (cls == "wce") v.classification = ClassificationLoss::WCE;
    else throw ValidationError("unknown classification loss: " + text);
    if (cou == "none") v.counting = CountingLoss::None;
    else if (cou == "mae") v.counting = CountingLoss::MAE;
    else if (cou == "hrc") v.counting = CountingLoss::HRC;
    else throw ValidationError("unknown counting loss: " + text);
    return v;
}

/// Evaluate one ablation variant with gradients, reusing the matching.
/// Shares the composition rules of ttc_total: the matching is a constant,
/// coordinate gradients exist only for matched proposals, confidence
/// gradients flow through classification plus (soft mode) counting.
inline LossReport variant_loss(const PointSet& gt, const ProposalSet& pred,
                               const Matching& matching, const LossVariant& variant,
                               const LossConfig& cfg) {
    cfg.validate();
    validate_matching(matching, gt.size(), pred.size());
    if (gt.empty()) throw InvalidInput("variant loss needs at least one ground-truth point");

    const double n = static_cast<double>(gt.size());
    LossReport report;
    report.grad_coords.assign(pred.size(), Vec2{});
    report.grad_conf.assign(pred.size(), 0.0);

    // regression over matched pairs
    std::vector<Point> matched;
    matched.reserve(matching.assignment.size());
    for (int j : matching.assignment) matched.push_back(pred.proposals[j].point);

    std::vector<Vec2> reg_grads(matched.size());
    double l_reg = 0.0;
    switch (variant.regression) {
        case RegressionLoss::MSE:
            for (std::size_t i = 0; i < matched.size(); ++i) {
                const double dx = matched[i].x - gt.points[i].x;
                const double dy = matched[i].y - gt.points[i].y;
                l_reg += (dx * dx + dy * dy) / n;
                reg_grads[i] = {2.0 * dx / n, 2.0 * dy / n};
            }
            break;
        case RegressionLoss::SmoothL1:
            for (std::size_t i = 0; i < matched.size(); ++i) {
                const detail::SmoothL1Eval s = detail::smooth_l1_eval(gt.points[i], matched[i]);
                l_reg += s.value / n;
                reg_grads[i] = {s.grad.x / n, s.grad.y / n};
            }
            break;
        case RegressionLoss::HSL1: {
            const detail::Hsl1Eval reg = detail::hsl1_eval(gt, matched);
            l_reg = reg.value;
            reg_grads = reg.grads;
            break;
        }
    }

    // classification over all proposals; CE is the unweighted form, i.e. the
    // weighted version with both class weights at 1
    detail::WceEval cls;
    if (variant.classification == ClassificationLoss::WCE) {
        cls = detail::wce_eval(matching, pred, cfg.alpha, cfg.wce_mode, cfg.confidence_clamp);
    } else {
        cls = detail::wce_eval(matching, pred, 0.5, WceMode::Standard, cfg.confidence_clamp);
        cls.value *= 2.0;
        for (double& g : cls.grads) g *= 2.0;
    }

    // counting on the effective count
    double l_cou = 0.0;
    double cou_grad_m = 0.0;
    if (variant.counting != CountingLoss::None) {
        const double m_eff = effective_count(pred, cfg);
        if (variant.counting == CountingLoss::HRC) {
            const detail::HrcEval cou = detail::hrc_eval(n, m_eff, cfg.epsilon);
            l_cou = cou.value;
            cou_grad_m = cou.grad_m;
        } else {
            const double u = m_eff - n;
            l_cou = std::abs(u);
            cou_grad_m = detail::sign(u);  // subgradient 0 at u == 0
        }
    }

    report.l_reg = l_reg;
    report.l_cls = cls.value;
    report.l_cou = l_cou;
    report.total = cfg.lambda1 * cls.value + cfg.lambda2 * l_reg + cfg.lambda3 * l_cou;

    for (std::size_t i = 0; i < matching.assignment.size(); ++i) {
        const int j = matching.assignment[i];
        report.grad_coords[j] = {cfg.lambda2 * reg_grads[i].x, cfg.lambda2 * reg_grads[i].y};
    }
    const bool soft = cfg.hrc_count_mode == HrcCountMode::Soft && variant.counting != CountingLoss::None;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        double g = cfg.lambda1 * cls.grads[j];
        if (soft) g += cfg.lambda3 * cou_grad_m;
        report.grad_conf[j] = g;
    }
    return report;
}

// ----------------------------------------------------------- fit setup

enum class InitMode { Grid, Random };

/// Gradient-descent harness configuration. The proposal set is the free
/// parameter vector; there is no network underneath.
struct FitConfig {
    int steps = 5000;
    double lr_coord = 25.0;         // pixel-scale parameters move slowly under
                                    // log-damped losses; see README
    double lr_conf = 0.05;          // confidences live on [0, 1]
    double proposal_factor = 1.5;   // M = ceil(factor * N)
    InitMode init = InitMode::Grid;
    int rematch_every = 1;
    std::uint64_t seed = 0;
    LossVariant variant{};          // defaults to the full combination

    void validate() const {
        if (steps < 0) throw ValidationError("steps must be >= 0");
        if (!(lr_coord > 0.0) || !std::isfinite(lr_coord)) throw ValidationError("lr_coord must be > 0");
        if (!(lr_conf > 0.0) || !std::isfinite(lr_conf)) throw ValidationError("lr_conf must be > 0");
        if (!(proposal_factor >= 1.0) || !std::isfinite(proposal_factor))
            throw ValidationError("proposal_factor must be >= 1");
        if (rematch_every < 1) throw ValidationError("rematch_every must be >= 1");
    }
};

struct FitStep {
    double total = 0.0;
    double l_reg = 0.0;
    double l_cls = 0.0;
    double l_cou = 0.0;
    double mean_matched_dist = 0.0;
    int decoded_count = 0;
};

/// Full optimization record: one FitStep per evaluation (steps + 1 of them,
/// step 0 included) plus the proposals as they stood after the last update.
struct FitTrace {
    std::vector<FitStep> steps;
    ProposalSet final_proposals;
};

/// M = ceil(proposal_factor * N) proposals, confidence 0.5 each. Grid mode
/// lays a near-square lattice over the image (cell centers, row-major);
/// random mode samples uniformly. Only random mode consumes the seed.
inline ProposalSet init_proposals(const Scene& scene, const FitConfig& cfg) {
    cfg.validate();
    if (scene.gt.empty()) throw InvalidInput("fit needs at least one ground-truth point");
    if (scene.width < 1 || scene.height < 1) throw InvalidInput("scene dimensions must be >= 1");

    const int m = static_cast<int>(std::ceil(cfg.proposal_factor * static_cast<double>(scene.gt.size())));
    ProposalSet pred;
    pred.proposals.reserve(m);

    if (cfg.init == InitMode::Grid) {
        const double w = scene.width;
        const double h = scene.height;
        const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(m * w / h))));
        const int rows = std::max(1, (m + cols - 1) / cols);
        for (int i = 0; i < m; ++i) {
            const int r = i / cols;
            const int c = i % cols;
            pred.proposals.push_back({{(c + 0.5) * w / cols, (r + 0.5) * h / rows}, 0.5});
        }
    } else {
        Rng rng = make_rng(cfg.seed);
        for (int i = 0; i < m; ++i) {
            const double x = uniform_range(rng, 0.0, scene.width);
            const double y = uniform_range(rng, 0.0, scene.height);
            pred.proposals.push_back({{x, y}, 0.5});
        }
    }
    return pred;
}

/// Plain gradient descent on proposal coordinates and confidences against a
/// fixed scene. Re-matches every cfg.rematch_every steps, records a FitStep
/// per evaluation, projects confidences back into [clamp, 1-clamp] after each
/// update, and aborts with DivergenceDetected if the loss leaves the reals.
/// Deterministic for fixed (scene, cfg, lcfg).
inline FitTrace fit_points(const Scene& scene, const FitConfig& cfg, const LossConfig& lcfg) {
    cfg.validate();
    lcfg.validate();

    ProposalSet pred = init_proposals(scene, cfg);
    const PointSet& gt = scene.gt;

    FitTrace trace;
    trace.steps.reserve(cfg.steps + 1);

    Matching matching;
    for (int s = 0; s <= cfg.steps; ++s) {
        if (s % cfg.rematch_every == 0) matching = match_points(gt, pred, lcfg);

        const LossReport report = variant_loss(gt, pred, matching, cfg.variant, lcfg);
        if (!std::isfinite(report.total))
            throw DivergenceDetected("loss became non-finite at step " + std::to_string(s));

        FitStep step;
        step.total = report.total;
        step.l_reg = report.l_reg;
        step.l_cls = report.l_cls;
        step.l_cou = report.l_cou;
        double dist = 0.0;
        for (std::size_t i = 0; i < matching.assignment.size(); ++i)
            dist += euclidean_distance(gt.points[i], pred.proposals[matching.assignment[i]].point);
        step.mean_matched_dist = dist / static_cast<double>(matching.assignment.size());
        step.decoded_count = count_from_proposals(pred, lcfg.count_threshold);
        trace.steps.push_back(step);

        if (s == cfg.steps) break;

        for (std::size_t j = 0; j < pred.size(); ++j) {
            Proposal& pr = pred.proposals[j];
            pr.point.x -= cfg.lr_coord * report.grad_coords[j].x;
            pr.point.y -= cfg.lr_coord * report.grad_coords[j].y;
            // Bound well below sqrt(DBL_MAX) so the next cost/loss pass
            // cannot overflow before divergence is reported.
            constexpr double kDivergenceBound = 1e100;
            if (!is_finite(pr.point) || std::abs(pr.point.x) > kDivergenceBound ||
                std::abs(pr.point.y) > kDivergenceBound)
                throw DivergenceDetected("proposal coordinates diverged at step " +
                                         std::to_string(s + 1));
            pr.confidence = detail::clamp_confidence(pr.confidence - cfg.lr_conf * report.grad_conf[j],
                                                     lcfg.confidence_clamp);
        }
    }

    trace.final_proposals = std::move(pred);
    return trace;
}

// ------------------------------------------------------------- ablation

struct AblationRow {
    LossVariant variant;
    double count_mae = 0.0;
    double count_mse = 0.0;
};

/// Fit every (scene, seed) under each variant and aggregate decoded-count
/// errors against each scene's own annotated count. Seeds are paired: job
/// (scene j, repeat k) uses the same derived seed under every variant, so
/// rows differ only in the loss. Fits run in parallel (PM_THREADS); results
/// are written into fixed slots, so the report is thread-count independent.
inline std::vector<AblationRow> run_ablation(const std::vector<Scene>& suite,
                                             const std::vector<LossVariant>& grid, int n_seeds,
                                             const FitConfig& base, const LossConfig& lcfg) {
    base.validate();
    lcfg.validate();
    if (suite.empty()) throw InvalidInput("ablation needs at least one scene");
    if (grid.empty()) throw InvalidInput("ablation needs at least one variant");
    if (n_seeds < 1) throw InvalidInput("ablation needs at least one seed");
    for (const Scene& s : suite)
        if (s.gt.empty()) throw InvalidInput("ablation scenes need at least one point");

    const std::size_t fits_per_variant = suite.size() * static_cast<std::size_t>(n_seeds);
    const std::size_t total = grid.size() * fits_per_variant;
    std::vector<std::pair<double, double>> counts(total);  // (gt, predicted)

    parallel_for(total, [&](std::size_t job) {
        const std::size_t v = job / fits_per_variant;
        const std::size_t rest = job % fits_per_variant;
        const std::size_t scene_idx = rest / n_seeds;
        const std::size_t rep = rest % n_seeds;

        FitConfig cfg = base;
        cfg.variant = grid[v];
        cfg.seed = mix_seed(base.seed, rest);  // same seed across variants
        const FitTrace trace = fit_points(suite[scene_idx], cfg, lcfg);
        counts[job] = {static_cast<double>(suite[scene_idx].gt.size()),
                       static_cast<double>(count_from_proposals(trace.final_proposals,
                                                                lcfg.count_threshold))};
        (void)rep;
    });

    std::vector<AblationRow> rows;
    rows.reserve(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) {
        const auto first = counts.begin() + static_cast<std::ptrdiff_t>(v * fits_per_variant);
        const EvalResult agg = evaluate_dataset(std::vector<std::pair<double, double>>(
            first, first + static_cast<std::ptrdiff_t>(fits_per_variant)));
        rows.push_back({grid[v], agg.mae, agg.mse});
    }
    return rows;
}

}  // namespace pointmatch
