#pragma once

#include <functional>
#include <vector>

#include "pointmatch/core.hpp"

namespace pointmatch {

struct NumericGradient {
    std::vector<Vec2> coords;
    std::vector<double> conf;
};

/// Central finite differences of a scalar function over every proposal
/// coordinate and confidence. Numeric oracle for the analytic gradients;
/// evaluation points should stay away from loss kinks.
inline NumericGradient finite_diff_gradient(const std::function<double(const ProposalSet&)>& f,
                                            const ProposalSet& pred, double h) {
    if (!(h > 0.0)) throw InvalidInput("finite-difference step must be > 0");
    NumericGradient out;
    out.coords.assign(pred.size(), Vec2{});
    out.conf.assign(pred.size(), 0.0);

    ProposalSet work = pred;
    auto central = [&](double& slot) {
        const double saved = slot;
        slot = saved + h;
        const double up = f(work);
        slot = saved - h;
        const double down = f(work);
        slot = saved;
        return (up - down) / (2.0 * h);
    };

    for (std::size_t j = 0; j < pred.size(); ++j) {
        out.coords[j].x = central(work.proposals[j].point.x);
        out.coords[j].y = central(work.proposals[j].point.y);
        out.conf[j] = central(work.proposals[j].confidence);
    }
    return out;
}

}  // namespace pointmatch
