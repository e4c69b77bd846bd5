#include "doctest.h"

#include "gdd/descriptor.hpp"
#include "gdd/errors.hpp"
#include "gdd/geodesics.hpp"
#include "gdd/lowrank.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "testutil.hpp"

using gdd::Correspondence;
using gdd::GeodesicBasis;
using gdd::GeodesicDistanceDescriptor;
using gdd::GeodesicSolver;

namespace {

Eigen::MatrixXd dense_distances(const gdd::TriangleMesh& mesh, GeodesicSolver solver) {
    std::vector<int> all(static_cast<size_t>(mesh.vertices.rows()));
    std::iota(all.begin(), all.end(), 0);
    Eigen::MatrixXd rows = gdd::geodesic_rows(mesh, all, solver);
    gdd::symmetrize_sample_columns(rows, all);
    return rows;
}

GeodesicBasis make_basis(const Eigen::MatrixXd& Q, const Eigen::VectorXd& lambda) {
    GeodesicBasis b;
    b.Q = Q;
    b.eigenvalues = lambda;
    return b;
}

// Spearman rank correlation, no-ties formula (inputs are generic doubles).
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t m = a.size();
    auto ranks = [m](const std::vector<double>& v) {
        std::vector<int> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[x] < v[y]; });
        std::vector<double> r(m);
        for (size_t p = 0; p < m; ++p) r[static_cast<size_t>(idx[p])] = static_cast<double>(p);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    double sum = 0.0;
    for (size_t t = 0; t < m; ++t) sum += (ra[t] - rb[t]) * (ra[t] - rb[t]);
    const double md = static_cast<double>(m);
    return 1.0 - 6.0 * sum / (md * (md * md - 1.0));
}

Correspondence identity_corr(int n) {
    Correspondence corr;
    corr.map.resize(static_cast<size_t>(n));
    std::iota(corr.map.begin(), corr.map.end(), 0);
    return corr;
}

} // namespace

TEST_SUITE("descriptor") {

TEST_CASE("column norms carry |lambda| and the signature carries the sign") {
    std::mt19937 rng(2u);
    const Eigen::MatrixXd Q = gddtest::random_orthogonal(6, rng).leftCols(2);
    Eigen::VectorXd lambda(2);
    lambda << 4.0, -1.0;
    const auto g = gdd::build_gdd(make_basis(Q, lambda));

    REQUIRE(g.X.cols() == 2);
    CHECK(g.X.col(0).squaredNorm() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(g.X.col(1).squaredNorm() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.signature[0] == 1);
    CHECK(g.signature[1] == -1);
    CHECK(g.eigenvalues[0] == doctest::Approx(4.0));
    CHECK(g.eigenvalues[1] == doctest::Approx(-1.0));
}

TEST_CASE("X diag(J) X^T reproduces Q Lambda Q^T") {
    std::mt19937 rng(13u);
    const Eigen::MatrixXd Q = gddtest::random_orthogonal(20, rng).leftCols(3);
    Eigen::VectorXd lambda(3);
    lambda << 5.0, -3.0, 2.0;
    const auto g = gdd::build_gdd(make_basis(Q, lambda));

    const Eigen::MatrixXd lhs =
        g.X * g.signature.cast<double>().asDiagonal() * g.X.transpose();
    const Eigen::MatrixXd rhs = Q * lambda.asDiagonal() * Q.transpose();
    CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("zero eigenvalues are dropped") {
    std::mt19937 rng(29u);
    const Eigen::MatrixXd Q = gddtest::random_orthogonal(8, rng).leftCols(3);
    Eigen::VectorXd lambda(3);
    lambda << 4.0, 1e-15, -1.0;
    const auto g = gdd::build_gdd(make_basis(Q, lambda));
    REQUIRE(g.X.cols() == 2);
    CHECK(g.eigenvalues[0] == doctest::Approx(4.0));
    CHECK(g.eigenvalues[1] == doctest::Approx(-1.0));

    const auto row = gdd::descriptor_row(g, 3);
    CHECK(row.values.size() == 2);
    CHECK(row.signature.size() == 2);
    CHECK(row.values[0] == g.X(3, 0));
}

TEST_CASE("descriptor distances: zero at i == j, bitwise symmetric, monotone with D") {
    const auto mesh = gddtest::bumpy_sphere(3); // 642 vertices
    const int n = static_cast<int>(mesh.vertices.rows());
    const auto fact = gdd::build_factorization(mesh, 100, GeodesicSolver::FastMarching);
    auto basis = gdd::orthogonalize(fact);
    basis.Q = Eigen::MatrixXd(basis.Q.leftCols(50));
    basis.eigenvalues = Eigen::VectorXd(basis.eigenvalues.head(50));
    const auto g = gdd::build_gdd(basis);

    CHECK(gdd::descriptor_distance(g, 17, 17) == 0.0);
    CHECK_THROWS_AS(gdd::descriptor_distance(g, 0, n), gdd::ValidationError);

    std::mt19937 rng(41u);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<double> desc_d, geo_d;
    for (int s = 0; s < 40; ++s) {
        const int i = pick(rng);
        const auto field = gdd::geodesic_from(mesh, i, GeodesicSolver::FastMarching);
        for (int t = 0; t < 50; ++t) {
            const int j = pick(rng);
            CHECK(gdd::descriptor_distance(g, i, j) == gdd::descriptor_distance(g, j, i));
            desc_d.push_back(gdd::descriptor_distance(g, i, j));
            geo_d.push_back(field.values[j]);
        }
    }
    CHECK(spearman(desc_d, geo_d) >= 0.9);
}

TEST_CASE("reconstruct_distance matches the dense matrix and reconstruct_entry") {
    const auto mesh = gddtest::grid_mesh(15); // 225 vertices
    const Eigen::MatrixXd D = dense_distances(mesh, GeodesicSolver::Dijkstra);
    const int n = static_cast<int>(D.rows());
    const auto basis = gdd::exact_basis(D, n);
    const auto g = gdd::build_gdd(basis);

    const double dmax = D.maxCoeff();
    std::mt19937 rng(53u);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < 60; ++t) {
        const int i = pick(rng), j = pick(rng);
        CHECK(std::abs(gdd::reconstruct_distance(g, i, j) - D(i, j)) <= 1e-6 * dmax);
        CHECK(std::abs(gdd::reconstruct_distance(g, i, j) -
                       gdd::reconstruct_entry(basis, i, j)) <= 1e-12 * dmax);
    }
    for (int t = 0; t < 10; ++t) {
        const int i = pick(rng);
        CHECK(std::abs(gdd::reconstruct_distance(g, i, i)) <= 1e-6 * dmax);
    }
    CHECK_THROWS_AS(gdd::reconstruct_distance(g, n, 0), gdd::ValidationError);
}

TEST_CASE("block-orthogonal ambiguity leaves distances and reconstructions alone") {
    const auto mesh = gddtest::bumpy_sphere(2); // 162 vertices
    const Eigen::MatrixXd D = dense_distances(mesh, GeodesicSolver::FastMarching);
    const auto g = gdd::build_gdd(gdd::exact_basis(D, 20));
    const int k = static_cast<int>(g.X.cols());

    std::vector<int> sig(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) sig[static_cast<size_t>(c)] = g.signature[c];
    std::mt19937 rng(61u);
    const Eigen::MatrixXd C = gddtest::random_block_orthogonal(sig, rng);

    GeodesicDistanceDescriptor rotated = g;
    rotated.X = g.X * C;

    std::uniform_int_distribution<int> pick(0, static_cast<int>(D.rows()) - 1);
    for (int t = 0; t < 100; ++t) {
        const int i = pick(rng), j = pick(rng);
        CHECK(std::abs(gdd::descriptor_distance(rotated, i, j) -
                       gdd::descriptor_distance(g, i, j)) <= 1e-10);
        CHECK(std::abs(gdd::reconstruct_distance(rotated, i, j) -
                       gdd::reconstruct_distance(g, i, j)) <= 1e-10);
    }
}

TEST_CASE("rigid motion of the mesh preserves descriptor distances") {
    const auto mesh = gddtest::bumpy_sphere(2);
    const int n = static_cast<int>(mesh.vertices.rows());

    gdd::TriangleMesh moved = mesh;
    std::mt19937 rng(71u);
    Eigen::MatrixXd R = gddtest::random_orthogonal(3, rng);
    moved.vertices = (mesh.vertices * R.transpose()).rowwise() +
                     Eigen::RowVector3d(0.3, -1.2, 2.0);

    const auto g1 = gdd::build_gdd(gdd::exact_basis(dense_distances(mesh, GeodesicSolver::FastMarching), 20));
    const auto g2 = gdd::build_gdd(gdd::exact_basis(dense_distances(moved, GeodesicSolver::FastMarching), 20));

    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < 200; ++t) {
        const int i = pick(rng), j = pick(rng);
        CHECK(gdd::descriptor_distance(g1, i, j) ==
              doctest::Approx(gdd::descriptor_distance(g2, i, j)).epsilon(1e-6));
    }
}

TEST_CASE("vertex permutation permutes descriptor rows") {
    const auto mesh = gddtest::bumpy_sphere(2);
    const int n = static_cast<int>(mesh.vertices.rows());
    const auto perm = gddtest::random_permutation(n, 77u);
    const auto permuted = gddtest::permute_mesh(mesh, perm);

    const auto g1 = gdd::build_gdd(gdd::exact_basis(dense_distances(mesh, GeodesicSolver::FastMarching), 20));
    const auto g2 = gdd::build_gdd(gdd::exact_basis(dense_distances(permuted, GeodesicSolver::FastMarching), 20));

    std::mt19937 rng(83u);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < 200; ++t) {
        const int i = pick(rng), j = pick(rng);
        CHECK(gdd::descriptor_distance(g1, i, j) ==
              doctest::Approx(gdd::descriptor_distance(g2, perm[static_cast<size_t>(i)],
                                                       perm[static_cast<size_t>(j)]))
                  .epsilon(1e-6));
    }
}

TEST_CASE("sampled objective: zero on identity, near-zero on the true permutation") {
    const auto mesh = gddtest::bumpy_sphere(2);
    const int n = static_cast<int>(mesh.vertices.rows());

    const auto obj_id = gdd::gh_objective_sampled(identity_corr(n), mesh, mesh, 60, 5u);
    // Identity on the very same mesh compares identical rows.
    CHECK(obj_id.rms == 0.0);
    CHECK(obj_id.raw_squared_sum == 0.0);

    const auto perm = gddtest::random_permutation(n, 19u);
    const auto permuted = gddtest::permute_mesh(mesh, perm);
    Correspondence truth;
    truth.map.assign(perm.begin(), perm.end());
    const auto obj_true = gdd::gh_objective_sampled(truth, mesh, permuted, 60, 5u);

    const auto rows = gdd::geodesic_rows(mesh, {0, n / 2}, GeodesicSolver::FastMarching);
    const double mean_d = rows.mean();
    CHECK(obj_true.rms <= 1e-3 * mean_d);
}

TEST_CASE("sampled objective separates random maps from the truth") {
    const auto mesh = gddtest::grid_mesh(9); // 81 vertices
    const int n = 81;
    const auto obj_id = gdd::gh_objective_sampled(identity_corr(n), mesh, mesh, 40, 3u);

    std::mt19937 rng(7u);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (unsigned seed = 0; seed < 10; ++seed) {
        Correspondence random_corr;
        random_corr.map.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) random_corr.map[static_cast<size_t>(i)] = pick(rng);
        const auto obj_rand = gdd::gh_objective_sampled(random_corr, mesh, mesh, 40, seed);
        CHECK(obj_rand.rms > obj_id.rms);
    }
}

TEST_CASE("sampled objective validates its inputs") {
    const auto mesh = gddtest::grid_mesh(5); // 25 vertices
    CHECK_THROWS_AS(gdd::gh_objective_sampled(identity_corr(25), mesh, mesh, 26, 1u),
                    gdd::ValidationError);
    Correspondence bad = identity_corr(25);
    bad.map[3] = 99;
    CHECK_THROWS_AS(gdd::gh_objective_sampled(bad, mesh, mesh, 10, 1u), gdd::ValidationError);
    Correspondence short_map = identity_corr(24);
    CHECK_THROWS_AS(gdd::gh_objective_sampled(short_map, mesh, mesh, 10, 1u),
                    gdd::ValidationError);
}

} // TEST_SUITE
