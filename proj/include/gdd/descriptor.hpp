#pragma once

#include "gdd/correspondence.hpp"
#include "gdd/geodesics.hpp"
#include "gdd/lowrank.hpp"
#include "gdd/mesh.hpp"

#include <Eigen/Core>

namespace gdd {

// Per-vertex descriptor X = Q sqrt(|Lambda|) with a +-1 signature recording
// the eigenvalue signs, so that X diag(signature) X^T reconstructs the
// distance matrix. Columns keep the descending-|eigenvalue| order of the
// basis they came from.
struct GeodesicDistanceDescriptor {
    Eigen::MatrixXd X;
    Eigen::VectorXi signature;
    Eigen::VectorXd eigenvalues;
};

// A single row of X together with the (shared) signature.
struct DescriptorRow {
    Eigen::VectorXd values;
    Eigen::VectorXi signature;
};

// Sampled Gromov-Hausdorff-style objective: RMS plus the raw squared sum of
// (D1 - D2) over the sampled submatrix, so values compare across sample sizes.
struct GhObjective {
    double rms = 0.0;
    double raw_squared_sum = 0.0;
    int sample_size = 0;
};

// Columns with |lambda| below 1e-12 of the largest magnitude are dropped.
GeodesicDistanceDescriptor build_gdd(const GeodesicBasis& basis);

DescriptorRow descriptor_row(const GeodesicDistanceDescriptor& g, int i);

// Plain Euclidean distance between rows i and j of X (signature ignored:
// both parts contribute positively to the norm).
double descriptor_distance(const GeodesicDistanceDescriptor& g, int i, int j);

// Signed reconstruction sum_c signature[c] * X(i,c) * X(j,c).
double reconstruct_distance(const GeodesicDistanceDescriptor& g, int i, int j);

// Draws sample_size source vertices (without replacement, seeded), pairs them
// through corr and returns the RMS difference of the two sampled distance
// submatrices. corr must map every vertex of mesh1 into mesh2.
GhObjective gh_objective_sampled(const Correspondence& corr, const TriangleMesh& mesh1,
                                 const TriangleMesh& mesh2, int sample_size, unsigned seed,
                                 GeodesicSolver solver = GeodesicSolver::FastMarching);

} // namespace gdd
