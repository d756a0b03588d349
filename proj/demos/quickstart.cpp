// Quickstart: build a toy scene, match proposals to it, evaluate the TTC
// loss, then let the fit harness pull free proposals onto the points.

#include <cstdio>

#include "pointmatch/pointmatch.hpp"

namespace pm = pointmatch;

int main() {
    // A 64x64 scene with four annotated heads.
    pm::Scene scene;
    scene.width = 64;
    scene.height = 64;
    scene.gt.points = {{10.0, 12.0}, {40.0, 9.0}, {22.0, 48.0}, {55.0, 30.0}};

    // Six proposals, two of them spurious.
    pm::ProposalSet pred;
    pred.proposals = {
        {{11.5, 13.0}, 0.9}, {{39.0, 10.0}, 0.8}, {{23.0, 46.0}, 0.7},
        {{54.0, 31.0}, 0.85}, {{5.0, 60.0}, 0.3}, {{60.0, 5.0}, 0.2},
    };

    pm::LossConfig cfg;  // gamma=0.05, alpha=0.5, lambdas=1
    const pm::Matching matching = pm::match_points(scene.gt, pred, cfg);
    std::printf("matched proposals:");
    for (int j : matching.assignment) std::printf(" %d", j);
    std::printf("  (unmatched:");
    for (int j : matching.unmatched) std::printf(" %d", j);
    std::printf(")\n");

    const pm::LossReport report = pm::ttc_total(scene.gt, pred, matching, cfg);
    std::printf("TTC loss: total=%.6f  cls=%.6f  reg=%.6f  cou=%.6f\n", report.total,
                report.l_cls, report.l_reg, report.l_cou);

    // Optimize a fresh proposal set against the scene.
    pm::FitConfig fit;
    fit.steps = 2000;
    const pm::FitTrace trace = pm::fit_points(scene, fit, cfg);
    const pm::FitStep& first = trace.steps.front();
    const pm::FitStep& last = trace.steps.back();
    std::printf("fit: loss %.4f -> %.4f, mean matched distance %.2f -> %.2f px, count %d -> %d\n",
                first.total, last.total, first.mean_matched_dist, last.mean_matched_dist,
                first.decoded_count, last.decoded_count);

    // Dataset-level counting metrics from decoded counts.
    const int decoded = pm::count_from_proposals(trace.final_proposals, cfg.count_threshold);
    const pm::EvalResult eval = pm::evaluate_dataset(
        {{static_cast<double>(scene.gt.size()), static_cast<double>(decoded)}});
    std::printf("counting: gt=%zu decoded=%d  MAE=%.3f MSE=%.3f\n", scene.gt.size(), decoded,
                eval.mae, eval.mse);
    return 0;
}
