#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pointmatch/core.hpp"

namespace pointmatch {

/// Number of proposals whose confidence reaches the threshold (inclusive).
inline int count_from_proposals(const ProposalSet& pred, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("count threshold must be in (0, 1)");
    int n = 0;
    for (const Proposal& p : pred.proposals)
        if (p.confidence >= tau) ++n;
    return n;
}

/// Differentiable count surrogate: sum of all confidences.
inline double soft_count(const ProposalSet& pred) {
    double s = 0.0;
    for (const Proposal& p : pred.proposals) s += p.confidence;
    return s;
}

struct CountRecord {
    std::string image_id;
    double gt_count = 0.0;
    double predicted_count = 0.0;
};

/// Dataset-level counting metrics. `mse` follows the crowd-counting
/// convention: it is the root of the mean squared count error, so it lives on
/// the same scale as `mae`.
struct EvalResult {
    std::vector<CountRecord> per_image;
    double mae = 0.0;
    double mse = 0.0;
};

inline EvalResult evaluate_dataset(std::vector<CountRecord> rows) {
    if (rows.empty()) throw EmptyDataset("evaluation needs at least one image");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (const CountRecord& r : rows) {
        const double e = r.predicted_count - r.gt_count;
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    EvalResult out;
    const double n = static_cast<double>(rows.size());
    out.mae = abs_sum / n;
    out.mse = std::sqrt(sq_sum / n);
    out.per_image = std::move(rows);
    return out;
}

inline EvalResult evaluate_dataset(const std::vector<std::pair<double, double>>& gt_pred_pairs) {
    std::vector<CountRecord> rows;
    rows.reserve(gt_pred_pairs.size());
    for (const auto& [gt, pred] : gt_pred_pairs) rows.push_back({"", gt, pred});
    return evaluate_dataset(std::move(rows));
}

}  // namespace pointmatch
