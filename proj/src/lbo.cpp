#include "gdd/lbo.hpp"

#include "gdd/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gdd {

namespace {

void flip_to_positive_max(Eigen::MatrixXd& Phi) {
    for (int c = 0; c < Phi.cols(); ++c) {
        int at = 0;
        Phi.col(c).cwiseAbs().maxCoeff(&at);
        if (Phi(at, c) < 0.0) Phi.col(c) = -Phi.col(c);
    }
}

// Roundoff can push the kernel eigenvalue a hair below zero; the operator
// itself is positive semidefinite.
void clamp_tiny_negatives(Eigen::VectorXd& freqs) {
    const double scale = freqs.size() ? std::abs(freqs[freqs.size() - 1]) : 0.0;
    for (int i = 0; i < freqs.size(); ++i)
        if (freqs[i] < 0.0 && freqs[i] >= -1e-8 * std::max(scale, 1.0)) freqs[i] = 0.0;
}

LboBasis dense_eigenbasis(const LaplacianPair& lap, int k) {
    const Eigen::MatrixXd L = Eigen::MatrixXd(lap.stiffness);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(L.rows(), L.cols());
    M.diagonal() = lap.mass;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(L, M);
    if (ges.info() != Eigen::Success)
        throw NumericalError("lbo_eigenbasis: dense eigensolver failed (converged 0 of " +
                             std::to_string(k) + " pairs)");
    LboBasis basis;
    basis.Phi = ges.eigenvectors().leftCols(k);
    basis.frequencies = ges.eigenvalues().head(k);
    basis.mass = lap.mass;
    flip_to_positive_max(basis.Phi);
    clamp_tiny_negatives(basis.frequencies);
    return basis;
}

// Shift-inverted Lanczos with full reorthogonalization in the M-inner
// product. The operator (L - sigma*M)^{-1} M is self-adjoint under M, and its
// largest Ritz values map back to the smallest eigenvalues of (L, M).
LboBasis lanczos_eigenbasis(const LaplacianPair& lap, int k) {
    const int n = static_cast<int>(lap.mass.size());
    const double scale = lap.stiffness.diagonal().sum() / lap.mass.sum();
    const double sigma = -1e-2 * scale;

    Eigen::SparseMatrix<double> K = lap.stiffness;
    for (int i = 0; i < n; ++i) K.coeffRef(i, i) -= sigma * lap.mass[i];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success)
        throw NumericalError("lbo_eigenbasis: factorization of the shifted stiffness failed");

    const int m_max = std::min(n, std::max(3 * k + 40, 80));
    Eigen::MatrixXd V(n, m_max);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_max);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m_max);

    // Deterministic start vector: raw mt19937 draws, identical on every run.
    std::mt19937 rng(0x5eedbeefu);
    auto fill_random = [&](Eigen::VectorXd& v) {
        for (int i = 0; i < n; ++i) v[i] = std::ldexp(static_cast<double>(rng()), -32) - 0.5;
    };
    auto m_norm = [&](const Eigen::VectorXd& v) {
        return std::sqrt(v.dot(lap.mass.cwiseProduct(v)));
    };

    Eigen::VectorXd v(n);
    fill_random(v);
    v /= m_norm(v);

    int m = 0;              // Krylov vectors built so far
    int converged = 0;      // converged Ritz pairs among the k wanted
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes;
    const double tol = 1e-10;

    auto converged_count = [&]() {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        tes.compute(T);
        if (m < k) return 0;
        int good = 0;
        // Largest Ritz values of the inverted operator sit at the top.
        for (int i = m - 1; i >= m - k; --i) {
            const double theta = tes.eigenvalues()[i];
            const double bound = std::abs(beta[m - 1] * tes.eigenvectors()(m - 1, i));
            if (bound <= tol * std::max(std::abs(theta), 1e-300)) ++good;
        }
        return good;
    };

    while (m < m_max) {
        V.col(m) = v;
        ++m;

        Eigen::VectorXd w = solver.solve(lap.mass.cwiseProduct(v));
        // Two Gram-Schmidt passes against everything built so far.
        Eigen::VectorXd h = V.leftCols(m).transpose() * lap.mass.cwiseProduct(w);
        w.noalias() -= V.leftCols(m) * h;
        Eigen::VectorXd h2 = V.leftCols(m).transpose() * lap.mass.cwiseProduct(w);
        w.noalias() -= V.leftCols(m) * h2;
        alpha[m - 1] = h[m - 1] + h2[m - 1];

        const double b = m_norm(w);
        if (b > 1e-12) {
            beta[m - 1] = b;
            v = w / b;
        } else if (m < m_max) {
            // Invariant subspace found; restart with a fresh direction.
            beta[m - 1] = 0.0;
            fill_random(v);
            Eigen::VectorXd g = V.leftCols(m).transpose() * lap.mass.cwiseProduct(v);
            v.noalias() -= V.leftCols(m) * g;
            const double vn = m_norm(v);
            if (vn <= 1e-12) break; // space exhausted
            v /= vn;
        }

        if (m >= k && (m % 10 == 0 || m == m_max)) {
            converged = converged_count();
            if (converged >= k) break;
        }
    }
    if (converged < k) converged = converged_count();
    if (converged < k)
        throw NumericalError("lbo_eigenbasis: Lanczos converged " + std::to_string(converged) +
                             " of " + std::to_string(k) + " pairs");

    LboBasis basis;
    basis.Phi = V.leftCols(m) * tes.eigenvectors().rightCols(k).rowwise().reverse();
    basis.frequencies.resize(k);
    for (int i = 0; i < k; ++i)
        basis.frequencies[i] = sigma + 1.0 / tes.eigenvalues()[m - 1 - i];
    basis.mass = lap.mass;
    flip_to_positive_max(basis.Phi);
    clamp_tiny_negatives(basis.frequencies);
    return basis;
}

} // namespace

LaplacianPair build_laplacian(const TriangleMesh& mesh) {
    const int n = static_cast<int>(mesh.vertices.rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(mesh.faces.rows()) * 12);

    for (int f = 0; f < mesh.faces.rows(); ++f) {
        for (int corner = 0; corner < 3; ++corner) {
            const int a = mesh.faces(f, corner);
            const int b = mesh.faces(f, (corner + 1) % 3);
            const int c = mesh.faces(f, (corner + 2) % 3);
            const Eigen::Vector3d e1 = mesh.vertices.row(b) - mesh.vertices.row(a);
            const Eigen::Vector3d e2 = mesh.vertices.row(c) - mesh.vertices.row(a);
            const double w = 0.5 * e1.dot(e2) / e1.cross(e2).norm();
            trips.emplace_back(b, c, -w);
            trips.emplace_back(c, b, -w);
            trips.emplace_back(b, b, w);
            trips.emplace_back(c, c, w);
        }
    }

    LaplacianPair lap;
    lap.stiffness.resize(n, n);
    lap.stiffness.setFromTriplets(trips.begin(), trips.end());
    lap.mass = vertex_areas(mesh).areas;
    return lap;
}

LboBasis lbo_eigenbasis(const LaplacianPair& lap, int k) {
    const int n = static_cast<int>(lap.mass.size());
    if (k < 1 || k > n)
        throw ValidationError("lbo_eigenbasis: k must be in [1, n], got " + std::to_string(k));
    if (n <= 600 || 3 * k + 40 >= n) return dense_eigenbasis(lap, k);
    return lanczos_eigenbasis(lap, k);
}

Eigen::VectorXd project(const LboBasis& basis, const Eigen::VectorXd& f) {
    if (f.size() != basis.Phi.rows())
        throw ValidationError("project: vector length does not match the basis");
    return basis.Phi.transpose() * basis.mass.cwiseProduct(f);
}

} // namespace gdd
