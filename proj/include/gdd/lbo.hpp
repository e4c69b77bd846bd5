#pragma once

#include "gdd/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gdd {

// Cotangent stiffness plus barycentric lumped mass. Stiffness is positive
// semidefinite with the constant vector in its kernel; mass is the diagonal
// of lumped vertex areas.
struct LaplacianPair {
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd mass;
};

// Mass-orthonormal eigenbasis (Phi^T M Phi = I), frequencies ascending and
// non-negative. Carries the lumped mass so projections stay self-contained.
struct LboBasis {
    Eigen::MatrixXd Phi;
    Eigen::VectorXd frequencies;
    Eigen::VectorXd mass;
};

LaplacianPair build_laplacian(const TriangleMesh& mesh);

// k smallest generalized eigenpairs of (stiffness, mass). Dense solve for
// small problems, shift-inverted Lanczos (deterministic start vector)
// otherwise. Throws NumericalError on non-convergence, reporting how many
// pairs did converge.
LboBasis lbo_eigenbasis(const LaplacianPair& lap, int k);

// Coefficients of f in the basis: Phi^T M f.
Eigen::VectorXd project(const LboBasis& basis, const Eigen::VectorXd& f);

} // namespace gdd
