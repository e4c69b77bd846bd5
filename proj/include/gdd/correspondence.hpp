#pragma once

#include <Eigen/Core>

#include <vector>

namespace gdd {

// One-sided vertex map: vertex i of the source shape goes to map[i] on the
// target. Not necessarily bijective (nearest-match semantics). residuals, when
// present, hold the descriptor-space distance of each match at convergence;
// maps loaded from files leave it empty.
struct Correspondence {
    std::vector<int> map;
    Eigen::VectorXd residuals;
};

} // namespace gdd
