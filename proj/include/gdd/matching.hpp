#pragma once

#include "gdd/correspondence.hpp"
#include "gdd/descriptor.hpp"
#include "gdd/lbo.hpp"
#include "gdd/lowrank.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace gdd {

// Block-orthogonal column alignment between two descriptors. C mixes columns
// only within a signature block; cross-sign entries are structural zeros.
// signature_compatible records whether the two inputs' signatures already
// agreed at the shared truncation (no per-sign columns dropped).
struct Alignment {
    Eigen::MatrixXd C;
    bool signature_compatible = true;
    std::vector<std::string> warnings;
};

struct LandmarkSet {
    std::vector<std::pair<int, int>> pairs; // (vertex in shape 1, vertex in shape 2)
};

// Two descriptors cut down to a common signature: per sign, the shared
// number of columns paired by rank (descending |lambda| within the sign),
// then all pairs merged by mean |lambda| so any prefix keeps the dominant
// columns. k_cap, when >= 0, first truncates each input to its top-k_cap
// columns by magnitude.
struct SharedDescriptors {
    GeodesicDistanceDescriptor first;
    GeodesicDistanceDescriptor second;
    bool signature_compatible = true;
};

SharedDescriptors shared_signature(const GeodesicDistanceDescriptor& g1,
                                   const GeodesicDistanceDescriptor& g2, int k_cap = -1);

// Best block-orthogonal C for ||A C - B||_F, solved per signature block via
// the SVD-based orthogonal Procrustes solution.
Alignment procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::VectorXi& signature);

struct IcpResult {
    Correspondence corr;
    Alignment align;
    std::vector<double> residual_history; // mean squared residual per iteration
    double rms_residual = 0.0;
    double max_row_residual = 0.0; // max row L2 residual (the 2,inf reading)
};

// Alternate exact nearest-neighbor assignment and per-block procrustes until
// the mean squared residual stops improving (relative tol) or max_iters.
IcpResult icp_match(const GeodesicDistanceDescriptor& g1, const GeodesicDistanceDescriptor& g2,
                    const Alignment& init, int max_iters = 100, double tol = 1e-6);
IcpResult icp_match(const GeodesicDistanceDescriptor& g1, const GeodesicDistanceDescriptor& g2,
                    const Correspondence& init, int max_iters = 100, double tol = 1e-6);

Alignment init_from_correspondence(const Correspondence& corr,
                                   const GeodesicDistanceDescriptor& g1,
                                   const GeodesicDistanceDescriptor& g2);

// Align through external per-vertex descriptor functions (one column per
// corresponding function on each shape): least-squares for C between
// desc1^T X1 and desc2^T X2, then polar projection onto the block-orthogonal
// set. Underdetermined inputs (d < k) fall back to the least-norm solution
// and say so in warnings.
Alignment init_from_descriptors(const Eigen::MatrixXd& desc1, const Eigen::MatrixXd& desc2,
                                const GeodesicBasis& basis1, const GeodesicBasis& basis2);

// Estimate the leading block x block corner of C from a few landmark pairs:
// ridge-regularized least squares (penalty on same-sign off-diagonals,
// structural zeros across signs), then polar projection per block, identity
// elsewhere. penalty < 0 selects the default 0.1 * mean squared landmark
// row norm.
Alignment init_from_landmarks(const GeodesicDistanceDescriptor& g1,
                              const GeodesicDistanceDescriptor& g2, const LandmarkSet& landmarks,
                              int block = 20, double penalty = -1.0);

// ICP over the rows of two LBO bases (all-positive signature), starting from
// an existing correspondence.
Correspondence postprocess_lbo(const Correspondence& corr, const LboBasis& phi1,
                               const LboBasis& phi2, int max_iters = 100, double tol = 1e-6);

} // namespace gdd
