#pragma once

#include <limits>
#include <numeric>
#include <vector>

#include "pointmatch/core.hpp"

namespace pointmatch {

/// Dense pairing-cost matrix, row i = ground-truth point, column j = proposal.
/// Entries may be negative. Requires rows <= cols.
struct CostMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries;  // row-major

    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * cols + j]; }
};

/// Pairing cost gamma * ||p_i - q_j||_2 - t_j between ground truth i and proposal j.
inline CostMatrix build_cost_matrix(const PointSet& gt, const ProposalSet& pred, double gamma) {
    const int n = static_cast<int>(gt.size());
    const int m = static_cast<int>(pred.size());
    if (n < 1) throw InvalidInput("cost matrix needs at least one ground-truth point");
    if (n > m) throw CountMismatch("more ground-truth points than proposals (" +
                                   std::to_string(n) + " > " + std::to_string(m) + ")");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("gamma must be positive and finite");
    validate_point_set(gt);
    validate_proposal_set(pred);

    CostMatrix cost;
    cost.rows = n;
    cost.cols = m;
    cost.entries.resize(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        const Point& p = gt.points[i];
        for (int j = 0; j < m; ++j) {
            const Proposal& q = pred.proposals[j];
            cost.at(i, j) = gamma * euclidean_distance(p, q.point) - q.confidence;
        }
    }
    return cost;
}

namespace detail {

inline void check_cost_matrix(const CostMatrix& cost) {
    if (cost.rows < 1) throw InvalidInput("cost matrix has no rows");
    if (cost.rows > cost.cols)
        throw CountMismatch("cost matrix has more rows than columns (" +
                            std::to_string(cost.rows) + " > " + std::to_string(cost.cols) + ")");
    for (double c : cost.entries) {
        if (!std::isfinite(c)) throw InvalidInput("cost matrix contains a non-finite entry");
    }
}

inline std::vector<int> unmatched_columns(const std::vector<int>& assignment, int cols) {
    std::vector<char> used(cols, 0);
    for (int j : assignment) used[j] = 1;
    std::vector<int> rest;
    rest.reserve(cols - static_cast<int>(assignment.size()));
    for (int j = 0; j < cols; ++j)
        if (!used[j]) rest.push_back(j);
    return rest;
}

}  // namespace detail

/// Minimum-cost injective assignment of rows to columns (rows <= cols) by the
/// Kuhn-Munkres algorithm with row/column potentials. Handles rectangular
/// matrices directly, no padding, and accepts negative entries.
inline Matching hungarian_match(const CostMatrix& cost) {
    detail::check_cost_matrix(cost);
    const int n = cost.rows;
    const int m = cost.cols;
    const double inf = std::numeric_limits<double>::infinity();

    // 1-based internals; p[j] = row currently assigned to column j (0 = none).
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Matching out;
    out.assignment.assign(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) out.assignment[p[j] - 1] = j - 1;
    }
    out.unmatched = detail::unmatched_columns(out.assignment, m);
    return out;
}

/// Exhaustive-enumeration minimizer over all injective row->column maps.
/// Verification oracle; bounded to rows <= 8, cols <= 10.
inline Matching brute_force_match(const CostMatrix& cost) {
    detail::check_cost_matrix(cost);
    const int n = cost.rows;
    const int m = cost.cols;
    if (n > 8 || m > 10)
        throw TooLarge("brute-force enumeration is bounded to 8 rows and 10 columns");

    std::vector<int> current(n, -1), best(n, -1);
    std::vector<char> used(m, 0);
    double best_cost = std::numeric_limits<double>::infinity();

    auto recurse = [&](auto&& self, int row, double acc) -> void {
        if (row == n) {
            if (acc < best_cost) {
                best_cost = acc;
                best = current;
            }
            return;
        }
        for (int j = 0; j < m; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            current[row] = j;
            self(self, row + 1, acc + cost.at(row, j));
            used[j] = 0;
        }
    };
    recurse(recurse, 0, 0.0);

    Matching out;
    out.assignment = best;
    out.unmatched = detail::unmatched_columns(best, m);
    return out;
}

/// Total cost of a matching under a given cost matrix.
inline double matching_cost(const CostMatrix& cost, const Matching& m) {
    validate_matching(m, m.assignment.size(), cost.cols);
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(m.assignment.size()); ++i)
        total += cost.at(i, m.assignment[i]);
    return total;
}

/// Convenience pipeline: cost matrix from the config's gamma, then matching.
inline Matching match_points(const PointSet& gt, const ProposalSet& pred, const LossConfig& cfg) {
    return hungarian_match(build_cost_matrix(gt, pred, cfg.gamma));
}

}  // namespace pointmatch
