#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointmatch {

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct InvalidAlpha : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };

// ------------------------------------------------------------- geometry

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// A 2-D location in raw pixel coordinates.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline bool is_finite(const Point& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

inline double euclidean_distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// ---------------------------------------------------------- point sets

/// Ordered ground-truth locations.
struct PointSet {
    std::vector<Point> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

inline void validate_point_set(const PointSet& ps) {
    for (const Point& p : ps.points) {
        if (!is_finite(p)) throw InvalidInput("point set contains a non-finite coordinate");
    }
}

/// A predicted location plus the confidence that it is a real individual.
struct Proposal {
    Point point;
    double confidence = 0.0;  // in [0, 1]
};

struct ProposalSet {
    std::vector<Proposal> proposals;

    std::size_t size() const { return proposals.size(); }
    bool empty() const { return proposals.empty(); }
};

inline void validate_proposal_set(const ProposalSet& ps) {
    for (const Proposal& pr : ps.proposals) {
        if (!is_finite(pr.point)) throw InvalidInput("proposal set contains a non-finite coordinate");
        if (!(pr.confidence >= 0.0 && pr.confidence <= 1.0))
            throw InvalidInput("proposal confidence outside [0, 1]");
    }
}

// ------------------------------------------------------------- matching

/// Injective assignment of ground-truth indices to proposal indices.
/// assignment[i] is the proposal matched to ground-truth point i; `unmatched`
/// lists the remaining proposal indices in ascending order. Indices are 0-based.
struct Matching {
    std::vector<int> assignment;
    std::vector<int> unmatched;
};

/// Permutation check: assignment entries pairwise distinct, and
/// assignment + unmatched together cover {0..proposal_count-1} exactly once.
inline bool is_valid_matching(const Matching& m, std::size_t gt_count, std::size_t proposal_count) {
    if (m.assignment.size() != gt_count) return false;
    if (m.assignment.size() + m.unmatched.size() != proposal_count) return false;
    std::vector<char> seen(proposal_count, 0);
    for (int j : m.assignment) {
        if (j < 0 || static_cast<std::size_t>(j) >= proposal_count || seen[j]) return false;
        seen[j] = 1;
    }
    for (int j : m.unmatched) {
        if (j < 0 || static_cast<std::size_t>(j) >= proposal_count || seen[j]) return false;
        seen[j] = 1;
    }
    return true;
}

inline void validate_matching(const Matching& m, std::size_t gt_count, std::size_t proposal_count) {
    if (!is_valid_matching(m, gt_count, proposal_count))
        throw InvalidInput("matching is not an injective cover of the proposal indices");
}

/// Proposals reordered so the matched ones come first (in ground-truth order),
/// followed by the unmatched ones in ascending index order.
inline std::vector<Proposal> reorder_matched_first(const Matching& m, const ProposalSet& pred) {
    validate_matching(m, m.assignment.size(), pred.size());
    std::vector<Proposal> out;
    out.reserve(pred.size());
    for (int j : m.assignment) out.push_back(pred.proposals[j]);
    for (int j : m.unmatched) out.push_back(pred.proposals[j]);
    return out;
}

// ------------------------------------------------------- configuration

enum class WceMode { Standard, Literal };
enum class HrcCountMode { Hard, Soft };

/// Scalar hyperparameters for pairing and the combined loss.
struct LossConfig {
    double gamma = 0.05;              // pairing cost scale on pixel distance
    double alpha = 0.5;               // classification weight in [0, 1]
    double epsilon = 1e-8;            // count-loss stabilizer
    double lambda1 = 1.0;             // classification weight
    double lambda2 = 1.0;             // regression weight
    double lambda3 = 1.0;             // counting weight
    double confidence_clamp = 1e-7;   // log-safety clamp, in (0, 0.5)
    double count_threshold = 0.5;     // decode threshold tau, in (0, 1)
    WceMode wce_mode = WceMode::Standard;
    HrcCountMode hrc_count_mode = HrcCountMode::Soft;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be > 0");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in [0, 1]");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be > 0");
        if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ValidationError("lambda1 must be >= 0");
        if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ValidationError("lambda2 must be >= 0");
        if (!(lambda3 >= 0.0) || !std::isfinite(lambda3)) throw ValidationError("lambda3 must be >= 0");
        if (!(confidence_clamp > 0.0 && confidence_clamp < 0.5))
            throw ValidationError("clamp must be in (0, 0.5)");
        if (!(count_threshold > 0.0 && count_threshold < 1.0))
            throw ValidationError("threshold must be in (0, 1)");
    }
};

/// Per-component loss values plus analytic gradients with respect to every
/// proposal's coordinates and confidence. Gradient arrays have one entry per
/// proposal, in proposal order.
struct LossReport {
    double l_reg = 0.0;
    double l_cls = 0.0;
    double l_cou = 0.0;
    double total = 0.0;
    std::vector<Vec2> grad_coords;
    std::vector<double> grad_conf;
};

}  // namespace pointmatch
