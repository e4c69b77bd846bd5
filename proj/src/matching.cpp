#include "gdd/matching.hpp"

#include "gdd/errors.hpp"
#include "gdd/kdtree.hpp"
#include "gdd/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace gdd {

namespace {

std::vector<int> sign_columns(const Eigen::VectorXi& signature, int sign) {
    std::vector<int> idx;
    for (int c = 0; c < signature.size(); ++c)
        if (signature[c] == sign) idx.push_back(c);
    return idx;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
    return out;
}

// Nearest orthogonal matrix (polar factor) via SVD.
Eigen::MatrixXd polar_orthogonal(const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd block_procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::VectorXi& signature) {
    const int k = static_cast<int>(A.cols());
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(k, k);
    for (int sign : {1, -1}) {
        const std::vector<int> idx = sign_columns(signature, sign);
        if (idx.empty()) continue;
        const Eigen::MatrixXd Ab = gather_cols(A, idx);
        const Eigen::MatrixXd Bb = gather_cols(B, idx);
        const Eigen::MatrixXd Cb = polar_orthogonal(Ab.transpose() * Bb);
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b)
                C(idx[a], idx[b]) = Cb(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    return C;
}

void validate_corr(const Correspondence& corr, int n1, int n2, const char* where) {
    if (corr.map.empty()) throw ValidationError(std::string(where) + ": empty correspondence");
    if (static_cast<int>(corr.map.size()) != n1)
        throw ValidationError(std::string(where) + ": correspondence covers " +
                              std::to_string(corr.map.size()) + " vertices, expected " +
                              std::to_string(n1));
    for (int t : corr.map)
        if (t < 0 || t >= n2)
            throw ValidationError(std::string(where) + ": correspondence entry out of range");
}

// Alternating assignment / alignment. C is consumed as the starting
// alignment and returned as the procrustes fit of the final map.
IcpResult icp_core(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                   const Eigen::VectorXi& signature, Eigen::MatrixXd C, int max_iters,
                   double tol) {
    const int n1 = static_cast<int>(X1.rows());
    const KdTree tree(X2);

    IcpResult res;
    res.corr.map.assign(static_cast<size_t>(n1), 0);
    Eigen::VectorXd res_sq(n1);

    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        const Eigen::MatrixXd Y = X1 * C;
        parallel_for(n1, [&](int i) {
            double d2 = 0.0;
            res.corr.map[static_cast<size_t>(i)] = tree.nearest(Y.row(i), &d2);
            res_sq[i] = d2;
        });
        const double mean_sq = res_sq.mean();
        res.residual_history.push_back(mean_sq);

        C = block_procrustes(X1, gather_rows(X2, res.corr.map), signature);
        if (iter > 0 && prev - mean_sq <= tol * std::max(prev, 1e-300)) break;
        prev = mean_sq;
    }

    res.corr.residuals = res_sq.cwiseSqrt();
    res.rms_residual = std::sqrt(res_sq.mean());
    res.max_row_residual = res.corr.residuals.maxCoeff();
    res.align.C = std::move(C);
    return res;
}

void append_block(GeodesicDistanceDescriptor& out, const GeodesicDistanceDescriptor& in,
                  const std::vector<int>& cols, int at) {
    for (size_t c = 0; c < cols.size(); ++c) {
        out.X.col(at + static_cast<int>(c)) = in.X.col(cols[c]);
        out.signature[at + static_cast<int>(c)] = in.signature[cols[c]];
        out.eigenvalues[at + static_cast<int>(c)] = in.eigenvalues[cols[c]];
    }
}

GeodesicDistanceDescriptor truncate_descriptor(const GeodesicDistanceDescriptor& g, int k) {
    GeodesicDistanceDescriptor out;
    out.X = g.X.leftCols(k);
    out.signature = g.signature.head(k);
    out.eigenvalues = g.eigenvalues.head(k);
    return out;
}

} // namespace

SharedDescriptors shared_signature(const GeodesicDistanceDescriptor& g1,
                                   const GeodesicDistanceDescriptor& g2, int k_cap) {
    GeodesicDistanceDescriptor a = g1, b = g2;
    if (k_cap >= 0) {
        a = truncate_descriptor(a, std::min<int>(k_cap, static_cast<int>(a.X.cols())));
        b = truncate_descriptor(b, std::min<int>(k_cap, static_cast<int>(b.X.cols())));
    }

    // Columns arrive in descending |lambda| order, so per-sign index lists
    // are already magnitude-sorted; pair them rank by rank within each sign.
    const std::vector<int> pos1 = sign_columns(a.signature, 1), pos2 = sign_columns(b.signature, 1);
    const std::vector<int> neg1 = sign_columns(a.signature, -1), neg2 = sign_columns(b.signature, -1);
    const size_t np = std::min(pos1.size(), pos2.size());
    const size_t nm = std::min(neg1.size(), neg2.size());
    const int k = static_cast<int>(np + nm);

    // Keep the merged pairs in descending magnitude order so prefixes of the
    // shared descriptor are the dominant columns (ties: positives first).
    struct Pair {
        int c1, c2, sign;
        double mag;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<size_t>(k));
    for (size_t i = 0; i < np; ++i)
        pairs.push_back({pos1[i], pos2[i], 1,
                         0.5 * (std::abs(a.eigenvalues[pos1[i]]) + std::abs(b.eigenvalues[pos2[i]]))});
    for (size_t i = 0; i < nm; ++i)
        pairs.push_back({neg1[i], neg2[i], -1,
                         0.5 * (std::abs(a.eigenvalues[neg1[i]]) + std::abs(b.eigenvalues[neg2[i]]))});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        if (x.mag != y.mag) return x.mag > y.mag;
        if (x.sign != y.sign) return x.sign > y.sign;
        return x.c1 < y.c1;
    });

    SharedDescriptors shared;
    shared.signature_compatible = a.signature.size() == b.signature.size() &&
                                  (a.signature.array() == b.signature.array()).all();
    for (auto* side : {&shared.first, &shared.second}) {
        const GeodesicDistanceDescriptor& src = side == &shared.first ? a : b;
        side->X.resize(src.X.rows(), k);
        side->signature.resize(k);
        side->eigenvalues.resize(k);
    }
    std::vector<int> cols1, cols2;
    for (const Pair& p : pairs) {
        cols1.push_back(p.c1);
        cols2.push_back(p.c2);
    }
    append_block(shared.first, a, cols1, 0);
    append_block(shared.second, b, cols2, 0);
    return shared;
}

Alignment procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::VectorXi& signature) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw ValidationError("procrustes: A and B must share their shape");
    if (A.rows() < 1) throw ValidationError("procrustes: needs at least one row");
    if (signature.size() != A.cols())
        throw ValidationError("procrustes: signature length must match the column count");

    Alignment align;
    align.C = block_procrustes(A, B, signature);
    return align;
}

IcpResult icp_match(const GeodesicDistanceDescriptor& g1, const GeodesicDistanceDescriptor& g2,
                    const Alignment& init, int max_iters, double tol) {
    const SharedDescriptors shared = shared_signature(g1, g2);
    const int k = static_cast<int>(shared.first.X.cols());
    if (k == 0) throw ValidationError("icp_match: no shared signature columns after truncation");
    if (init.C.rows() != k || init.C.cols() != k)
        throw ValidationError("icp_match: init alignment is " + std::to_string(init.C.rows()) +
                              "x" + std::to_string(init.C.cols()) + ", shared k is " +
                              std::to_string(k));

    IcpResult res = icp_core(shared.first.X, shared.second.X, shared.first.signature, init.C,
                             max_iters, tol);
    res.align.signature_compatible = shared.signature_compatible;
    return res;
}

IcpResult icp_match(const GeodesicDistanceDescriptor& g1, const GeodesicDistanceDescriptor& g2,
                    const Correspondence& init, int max_iters, double tol) {
    const SharedDescriptors shared = shared_signature(g1, g2);
    const int k = static_cast<int>(shared.first.X.cols());
    if (k == 0) throw ValidationError("icp_match: no shared signature columns after truncation");
    validate_corr(init, static_cast<int>(g1.X.rows()), static_cast<int>(g2.X.rows()), "icp_match");

    const Eigen::MatrixXd C0 = block_procrustes(
        shared.first.X, gather_rows(shared.second.X, init.map), shared.first.signature);
    IcpResult res =
        icp_core(shared.first.X, shared.second.X, shared.first.signature, C0, max_iters, tol);
    res.align.signature_compatible = shared.signature_compatible;
    return res;
}

Alignment init_from_correspondence(const Correspondence& corr,
                                   const GeodesicDistanceDescriptor& g1,
                                   const GeodesicDistanceDescriptor& g2) {
    const SharedDescriptors shared = shared_signature(g1, g2);
    validate_corr(corr, static_cast<int>(g1.X.rows()), static_cast<int>(g2.X.rows()),
                  "init_from_correspondence");
    Alignment align = procrustes(shared.first.X, gather_rows(shared.second.X, corr.map),
                                 shared.first.signature);
    align.signature_compatible = shared.signature_compatible;
    return align;
}

Alignment init_from_descriptors(const Eigen::MatrixXd& desc1, const Eigen::MatrixXd& desc2,
                                const GeodesicBasis& basis1, const GeodesicBasis& basis2) {
    if (desc1.rows() != basis1.Q.rows() || desc2.rows() != basis2.Q.rows())
        throw ValidationError("init_from_descriptors: descriptor rows must match the bases");
    if (desc1.cols() != desc2.cols() || desc1.cols() < 1)
        throw ValidationError("init_from_descriptors: the two shapes need the same nonzero "
                              "number of descriptor functions");

    const SharedDescriptors shared = shared_signature(build_gdd(basis1), build_gdd(basis2));
    const int k = static_cast<int>(shared.first.X.cols());
    if (k == 0)
        throw ValidationError("init_from_descriptors: no shared signature columns");
    const int d = static_cast<int>(desc1.cols());

    Alignment align;
    align.signature_compatible = shared.signature_compatible;
    if (d < k)
        align.warnings.push_back("init_from_descriptors: " + std::to_string(d) +
                                 " descriptor functions for " + std::to_string(k) +
                                 " basis columns; least-norm solution");

    const Eigen::MatrixXd A = desc1.transpose() * shared.first.X;  // d x k
    const Eigen::MatrixXd B = desc2.transpose() * shared.second.X; // d x k
    const Eigen::MatrixXd C_ls = A.completeOrthogonalDecomposition().solve(B);

    align.C = Eigen::MatrixXd::Zero(k, k);
    for (int sign : {1, -1}) {
        const std::vector<int> idx = sign_columns(shared.first.signature, sign);
        if (idx.empty()) continue;
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()),
                            static_cast<Eigen::Index>(idx.size()));
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b)
                sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    C_ls(idx[a], idx[b]);
        const Eigen::MatrixXd Cb = polar_orthogonal(sub);
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b)
                align.C(idx[a], idx[b]) = Cb(static_cast<Eigen::Index>(a),
                                             static_cast<Eigen::Index>(b));
    }
    return align;
}

Alignment init_from_landmarks(const GeodesicDistanceDescriptor& g1,
                              const GeodesicDistanceDescriptor& g2, const LandmarkSet& landmarks,
                              int block, double penalty) {
    const SharedDescriptors shared = shared_signature(g1, g2);
    const int k = static_cast<int>(shared.first.X.cols());
    const int m = static_cast<int>(landmarks.pairs.size());
    if (m < 1) throw ValidationError("init_from_landmarks: at least one landmark pair required");
    if (block < 1 || block > k)
        throw ValidationError("init_from_landmarks: block " + std::to_string(block) +
                              " exceeds the shared basis size " + std::to_string(k));

    const int n1 = static_cast<int>(g1.X.rows()), n2 = static_cast<int>(g2.X.rows());
    std::set<std::pair<int, int>> seen;
    for (const auto& [u, v] : landmarks.pairs) {
        if (u < 0 || u >= n1 || v < 0 || v >= n2)
            throw ValidationError("init_from_landmarks: landmark index out of range");
        if (!seen.insert({u, v}).second)
            throw ValidationError("init_from_landmarks: repeated landmark pair");
    }

    Eigen::MatrixXd Xh1(m, block), Xh2(m, block);
    for (int i = 0; i < m; ++i) {
        Xh1.row(i) = shared.first.X.row(landmarks.pairs[static_cast<size_t>(i)].first).head(block);
        Xh2.row(i) =
            shared.second.X.row(landmarks.pairs[static_cast<size_t>(i)].second).head(block);
    }
    if (penalty < 0.0) penalty = 0.1 * Xh1.squaredNorm() / m;

    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(k, k);
    const Eigen::VectorXi block_sig = shared.first.signature.head(block);
    for (int sign : {1, -1}) {
        const std::vector<int> idx = sign_columns(block_sig, sign);
        if (idx.empty()) continue;
        const int bs = static_cast<int>(idx.size());
        const Eigen::MatrixXd As = gather_cols(Xh1, idx);
        const Eigen::MatrixXd G = As.transpose() * As;
        const Eigen::MatrixXd rhs = As.transpose() * gather_cols(Xh2, idx);

        Eigen::MatrixXd Cb(bs, bs);
        for (int j = 0; j < bs; ++j) {
            Eigen::MatrixXd reg = G + penalty * Eigen::MatrixXd::Identity(bs, bs);
            reg(j, j) -= penalty; // the diagonal entry of C is not penalized
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
            if (ldlt.info() != Eigen::Success)
                throw NumericalError("init_from_landmarks: singular normal equations");
            Cb.col(j) = ldlt.solve(rhs.col(j));
        }
        const Eigen::MatrixXd Cb_orth = polar_orthogonal(Cb);
        for (int a = 0; a < bs; ++a) {
            C.row(idx[static_cast<size_t>(a)]).head(block).setZero();
            for (int b = 0; b < bs; ++b) C(idx[static_cast<size_t>(a)], idx[static_cast<size_t>(b)]) = Cb_orth(a, b);
        }
    }

    Alignment align;
    align.C = std::move(C);
    align.signature_compatible = shared.signature_compatible;
    return align;
}

Correspondence postprocess_lbo(const Correspondence& corr, const LboBasis& phi1,
                               const LboBasis& phi2, int max_iters, double tol) {
    const int k = static_cast<int>(std::min(phi1.Phi.cols(), phi2.Phi.cols()));
    if (k < 1) throw ValidationError("postprocess_lbo: empty basis");
    validate_corr(corr, static_cast<int>(phi1.Phi.rows()), static_cast<int>(phi2.Phi.rows()),
                  "postprocess_lbo");

    const Eigen::MatrixXd X1 = phi1.Phi.leftCols(k);
    const Eigen::MatrixXd X2 = phi2.Phi.leftCols(k);
    const Eigen::VectorXi signature = Eigen::VectorXi::Ones(k);
    const Eigen::MatrixXd C0 = block_procrustes(X1, gather_rows(X2, corr.map), signature);
    return icp_core(X1, X2, signature, C0, max_iters, tol).corr;
}

} // namespace gdd
