#pragma once

#include "gdd/correspondence.hpp"
#include "gdd/geodesics.hpp"
#include "gdd/mesh.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gdd {

// Kim-protocol distortion curve: the fraction of vertices whose mapped
// position lies within a relative geodesic error of each threshold.
struct DistortionCurve {
    std::vector<double> thresholds;
    std::vector<double> fractions;
};

// 0 to 0.25 in steps of 0.005; past ~25% relative error a map is no better
// than an arbitrary one.
std::vector<double> default_thresholds();

// Per-vertex geodesic distance on mesh2 between corr.map[v] and
// truth.map[v], normalized by sqrt(total surface area of mesh2); fractions
// are the empirical CDF of those errors at the given thresholds.
DistortionCurve distortion_curve(const Correspondence& corr, const Correspondence& truth,
                                 const TriangleMesh& mesh2,
                                 const std::vector<double>& thresholds = default_thresholds(),
                                 GeodesicSolver solver = GeodesicSolver::FastMarching);

struct ObjectiveRow {
    std::string name;
    double rms = 0.0;
    double raw_squared_sum = 0.0;
    int sample_size = 0;
};

// Scores every named correspondence with the sampled Frobenius objective on
// one shared seeded vertex sample, so the rows are directly comparable.
// Row order matches input order.
std::vector<ObjectiveRow> objective_table(
    const std::vector<std::pair<std::string, Correspondence>>& corrs, const TriangleMesh& mesh1,
    const TriangleMesh& mesh2, int sample_size = 1000, unsigned seed = 0,
    GeodesicSolver solver = GeodesicSolver::FastMarching);

} // namespace gdd
