#pragma once

#include "gdd/geodesics.hpp"
#include "gdd/mesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace gdd {

// Low-rank factorization of the symmetrized geodesic distance matrix,
// D ~= S T S^T with S n-by-k and T k-by-k symmetric, k = ceil(p/2).
struct LowRankFactorization {
    Eigen::MatrixXd S;
    Eigen::MatrixXd T;
};

// Orthonormal basis with signed eigenvalues sorted by descending magnitude:
// D ~= Q diag(eigenvalues) Q^T. The distance matrix is indefinite, so
// magnitude (not signed) order is the meaningful one.
struct GeodesicBasis {
    Eigen::MatrixXd Q;
    Eigen::VectorXd eigenvalues;
};

// One ground-truth distance sample dist(i, j) = d, for error probes.
struct ProbeEntry {
    int i = 0;
    int j = 0;
    double d = 0.0;
};

// Sample p vertices by FPS, solve one distance field per sample and factor
// the result. Throws ValidationError unless 4 <= p <= n; throws
// NumericalError on rank collapse of the sampled submatrix.
LowRankFactorization build_factorization(const TriangleMesh& mesh, int p,
                                         GeodesicSolver solver = GeodesicSolver::FastMarching,
                                         int seed_vertex = 0);

// Core construction from precomputed rows (row r holds distances from vertex
// samples[r] to every vertex). Columns at sampled vertices are symmetrized
// before factorizing; rows is taken by value because of that rewrite.
LowRankFactorization build_factorization(Eigen::MatrixXd rows, const std::vector<int>& samples);

// Rotate the factorization into an orthonormal eigenbasis. Exact up to
// roundoff: Q diag(lambda) Q^T equals S T S^T.
GeodesicBasis orthogonalize(const LowRankFactorization& fact);

// Dense top-k eigenbasis of a symmetric matrix. Desk-scale oracle: guarded
// at n <= 4000, rejects asymmetry beyond 1e-8 (relative).
GeodesicBasis exact_basis(const Eigen::MatrixXd& D, int k);

// Rayleigh-Ritz restriction of symmetric D to span(columns); lets any
// subspace (an LBO basis, say) be compared on equal terms with a
// GeodesicBasis in the reconstruction-error curves.
GeodesicBasis projected_basis(const Eigen::MatrixXd& D, const Eigen::MatrixXd& span);

// Sum over c of Q(i,c) * lambda_c * Q(j,c); bitwise symmetric in (i, j).
double reconstruct_entry(const GeodesicBasis& basis, int i, int j);

// result[b][c] = root-sum-square error over the probe entries of the
// (c+1)-truncated reconstruction from bases[b].
std::vector<std::vector<double>> reconstruction_error_curve(
    const std::vector<GeodesicBasis>& bases, const std::vector<ProbeEntry>& probe);

} // namespace gdd
