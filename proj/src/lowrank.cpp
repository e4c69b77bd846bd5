#include "gdd/lowrank.hpp"

#include "gdd/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace gdd {

namespace {

// Order eigenpairs by descending magnitude and flip each vector so its
// largest-magnitude entry is positive. Keeps tests (and file output) free of
// the arbitrary sign/order the eigensolver happens to produce.
GeodesicBasis sorted_basis(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& values,
                           int keep) {
    std::vector<int> order(static_cast<size_t>(values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(values[a]) > std::abs(values[b]);
    });

    GeodesicBasis basis;
    basis.Q.resize(vectors.rows(), keep);
    basis.eigenvalues.resize(keep);
    for (int c = 0; c < keep; ++c) {
        Eigen::VectorXd col = vectors.col(order[static_cast<size_t>(c)]);
        int at = 0;
        col.cwiseAbs().maxCoeff(&at);
        if (col[at] < 0.0) col = -col;
        basis.Q.col(c) = col;
        basis.eigenvalues[c] = values[order[static_cast<size_t>(c)]];
    }
    return basis;
}

} // namespace

LowRankFactorization build_factorization(const TriangleMesh& mesh, int p, GeodesicSolver solver,
                                         int seed_vertex) {
    const int n = static_cast<int>(mesh.vertices.rows());
    if (p < 4) throw ValidationError("build_factorization needs p >= 4, got " + std::to_string(p));
    if (p > n)
        throw ValidationError("build_factorization needs p <= n, got p = " + std::to_string(p) +
                              " with n = " + std::to_string(n));
    const SampleSet samples = farthest_point_sampling(mesh, p, seed_vertex, solver);
    Eigen::MatrixXd rows = geodesic_rows(mesh, samples.indices, solver);
    return build_factorization(std::move(rows), samples.indices);
}

LowRankFactorization build_factorization(Eigen::MatrixXd rows, const std::vector<int>& samples) {
    const int p = static_cast<int>(rows.rows());
    if (static_cast<int>(samples.size()) != p)
        throw ValidationError("build_factorization: sample list does not match row count");
    if (p < 4) throw ValidationError("build_factorization needs p >= 4, got " + std::to_string(p));

    symmetrize_sample_columns(rows, samples);

    Eigen::MatrixXd M(p, p);
    for (int c = 0; c < p; ++c) M.col(c) = rows.col(samples[static_cast<size_t>(c)]);
    M = 0.5 * (M + M.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const Eigen::VectorXd sigma = es.eigenvalues();
    const double sig_max = sigma.cwiseAbs().maxCoeff();

    std::vector<int> order(static_cast<size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(sigma[a]) > std::abs(sigma[b]); });

    // Pseudo-inverse cutoff: anything below 1e-10 of the largest magnitude
    // only amplifies sampling noise.
    int effective = 0;
    while (effective < p && std::abs(sigma[order[static_cast<size_t>(effective)]]) >= 1e-10 * sig_max)
        ++effective;
    if (sig_max == 0.0 || effective == 0)
        throw NumericalError("build_factorization: sampled submatrix rank collapse (effective rank " +
                             std::to_string(effective) + " of " + std::to_string(p) + ")");

    const int k = std::min((p + 1) / 2, effective);
    Eigen::MatrixXd U(p, k);
    Eigen::VectorXd vals(k);
    for (int c = 0; c < k; ++c) {
        U.col(c) = es.eigenvectors().col(order[static_cast<size_t>(c)]);
        vals[c] = sigma[order[static_cast<size_t>(c)]];
    }

    LowRankFactorization fact;
    fact.S = rows.transpose() * U * vals.cwiseInverse().asDiagonal();
    fact.T = Eigen::MatrixXd(vals.asDiagonal());
    return fact;
}

GeodesicBasis orthogonalize(const LowRankFactorization& fact) {
    const int k = static_cast<int>(fact.S.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(fact.S);
    const Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(fact.S.rows(), k);
    const Eigen::MatrixXd R =
        qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

    Eigen::MatrixXd A = R * fact.T * R.transpose();
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);

    const Eigen::MatrixXd vectors = thin_q * es.eigenvectors();
    return sorted_basis(vectors, es.eigenvalues(), k);
}

GeodesicBasis exact_basis(const Eigen::MatrixXd& D, int k) {
    const int n = static_cast<int>(D.rows());
    if (D.cols() != n) throw ValidationError("exact_basis expects a square matrix");
    if (n > 4000)
        throw ValidationError("exact_basis is a dense oracle, guarded at n <= 4000 (got n = " +
                              std::to_string(n) + ")");
    if (k < 1 || k > n) throw ValidationError("exact_basis: k out of range");
    const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
    if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw ValidationError("exact_basis: input is asymmetric beyond tolerance");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (D + D.transpose()));
    return sorted_basis(es.eigenvectors(), es.eigenvalues(), k);
}

GeodesicBasis projected_basis(const Eigen::MatrixXd& D, const Eigen::MatrixXd& span) {
    if (span.rows() != D.rows())
        throw ValidationError("projected_basis: span rows must match the matrix size");
    const int k = static_cast<int>(span.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
    const Eigen::MatrixXd B = qr.householderQ() * Eigen::MatrixXd::Identity(span.rows(), k);

    Eigen::MatrixXd A = B.transpose() * D * B;
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    return sorted_basis(B * es.eigenvectors(), es.eigenvalues(), k);
}

double reconstruct_entry(const GeodesicBasis& basis, int i, int j) {
    const int n = static_cast<int>(basis.Q.rows());
    if (i < 0 || i >= n || j < 0 || j >= n)
        throw ValidationError("reconstruct_entry: index out of range");
    double sum = 0.0;
    for (int c = 0; c < basis.Q.cols(); ++c)
        sum += basis.eigenvalues[c] * (basis.Q(i, c) * basis.Q(j, c));
    return sum;
}

std::vector<std::vector<double>> reconstruction_error_curve(
    const std::vector<GeodesicBasis>& bases, const std::vector<ProbeEntry>& probe) {
    if (probe.empty()) throw ValidationError("reconstruction_error_curve: empty probe set");

    std::vector<std::vector<double>> result;
    result.reserve(bases.size());
    for (const GeodesicBasis& basis : bases) {
        const int n = static_cast<int>(basis.Q.rows());
        for (const ProbeEntry& e : probe)
            if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
                throw ValidationError("reconstruction_error_curve: probe index out of range");

        const int k = static_cast<int>(basis.Q.cols());
        std::vector<double> partial(probe.size(), 0.0);
        std::vector<double> curve(static_cast<size_t>(k), 0.0);
        for (int c = 0; c < k; ++c) {
            double sq = 0.0;
            for (size_t t = 0; t < probe.size(); ++t) {
                partial[t] += basis.eigenvalues[c] * (basis.Q(probe[t].i, c) * basis.Q(probe[t].j, c));
                const double diff = partial[t] - probe[t].d;
                sq += diff * diff;
            }
            curve[static_cast<size_t>(c)] = std::sqrt(sq);
        }
        result.push_back(std::move(curve));
    }
    return result;
}

} // namespace gdd
