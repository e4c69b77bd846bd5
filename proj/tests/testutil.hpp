#pragma once

#include "gdd/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

namespace gddtest {

// res x res vertices on [0,1]^2, z = height(x,y). 2*(res-1)^2 triangles.
inline gdd::TriangleMesh grid_mesh(int res, double (*height)(double, double) = nullptr) {
    gdd::TriangleMesh mesh;
    mesh.vertices.resize(res * res, 3);
    for (int j = 0; j < res; ++j) {
        for (int i = 0; i < res; ++i) {
            const double x = static_cast<double>(i) / (res - 1);
            const double y = static_cast<double>(j) / (res - 1);
            mesh.vertices.row(j * res + i) << x, y, height ? height(x, y) : 0.0;
        }
    }
    mesh.faces.resize(2 * (res - 1) * (res - 1), 3);
    int f = 0;
    for (int j = 0; j + 1 < res; ++j) {
        for (int i = 0; i + 1 < res; ++i) {
            const int a = j * res + i, b = j * res + i + 1;
            const int c = (j + 1) * res + i, d = (j + 1) * res + i + 1;
            mesh.faces.row(f++) << a, b, d;
            mesh.faces.row(f++) << a, d, c;
        }
    }
    gdd::validate_mesh(mesh);
    return mesh;
}

inline gdd::TriangleMesh unit_tetrahedron() {
    gdd::TriangleMesh mesh;
    mesh.vertices.resize(4, 3);
    mesh.vertices << 0, 0, 0,
                     1, 0, 0,
                     0.5, std::sqrt(3.0) / 2.0, 0,
                     0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0);
    mesh.faces.resize(4, 3);
    mesh.faces << 0, 2, 1,
                  0, 1, 3,
                  1, 2, 3,
                  2, 0, 3;
    gdd::validate_mesh(mesh);
    return mesh;
}

inline gdd::TriangleMesh single_equilateral_triangle() {
    gdd::TriangleMesh mesh;
    mesh.vertices.resize(3, 3);
    mesh.vertices << 0, 0, 0,
                     1, 0, 0,
                     0.5, std::sqrt(3.0) / 2.0, 0;
    mesh.faces.resize(1, 3);
    mesh.faces << 0, 1, 2;
    gdd::validate_mesh(mesh);
    return mesh;
}

// Icosphere with a smooth radial bump so the distance spectrum has no exact
// symmetries. subdivisions: 0 -> 12 verts, 1 -> 42, 2 -> 162, 3 -> 642,
// 4 -> 2562.
inline gdd::TriangleMesh bumpy_sphere(int subdivisions, double bump = 0.25) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<Eigen::Vector3i> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Eigen::Vector3d m = (verts[a] + verts[b]).normalized();
            verts.push_back(m);
            int idx = static_cast<int>(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    gdd::TriangleMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const Eigen::Vector3d& u = verts[i];
        // Generic phases so no reflection or rotation of the sphere preserves
        // the radius field (a phase-free field would keep e.g. y -> -y exact).
        const double r = 1.0 + bump * std::sin(3.0 * u.x() + 0.9) * std::cos(2.0 * u.y() - 0.4) +
                         0.5 * bump * std::sin(5.0 * u.z() + 1.7) +
                         0.35 * bump * std::sin(1.3 * u.x() - 2.1 * u.z() + 0.5) *
                             std::cos(2.6 * u.y() + 1.1);
        mesh.vertices.row(static_cast<Eigen::Index>(i)) = (r * u).transpose();
    }
    mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t f = 0; f < faces.size(); ++f)
        mesh.faces.row(static_cast<Eigen::Index>(f)) = faces[f].transpose();
    gdd::validate_mesh(mesh);
    return mesh;
}

// Bumpy ellipsoid with three distinct axes. Unlike bumpy_sphere (where any
// rotation is a low-distortion self-map because only the bumps misalign),
// the anisotropic base shape leaves the identity as the only near-isometry,
// which self-matching tests depend on.
inline gdd::TriangleMesh asymmetric_blob(int subdivisions, double bump = 0.30) {
    gdd::TriangleMesh mesh = bumpy_sphere(subdivisions, bump);
    mesh.vertices.col(1) *= 0.63;
    mesh.vertices.col(2) *= 0.44;
    gdd::validate_mesh(mesh);
    return mesh;
}

// Planar grid with jittered interior vertices; guaranteed to contain obtuse
// triangles for exercising the unfolding path.
inline gdd::TriangleMesh jittered_grid(int res, unsigned seed) {
    gdd::TriangleMesh mesh = grid_mesh(res);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.35, 0.35);
    const double h = 1.0 / (res - 1);
    for (int j = 1; j + 1 < res; ++j)
        for (int i = 1; i + 1 < res; ++i) {
            mesh.vertices(j * res + i, 0) += h * jitter(rng);
            mesh.vertices(j * res + i, 1) += h * jitter(rng);
        }
    gdd::validate_mesh(mesh);
    return mesh;
}

// Applies a vertex permutation: new vertex perm[v] is old vertex v.
inline gdd::TriangleMesh permute_mesh(const gdd::TriangleMesh& mesh,
                                      const std::vector<int>& perm) {
    gdd::TriangleMesh out;
    out.vertices.resize(mesh.num_vertices(), 3);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out.vertices.row(perm[v]) = mesh.vertices.row(v);
    out.faces.resize(mesh.num_faces(), 3);
    for (int f = 0; f < mesh.num_faces(); ++f)
        for (int c = 0; c < 3; ++c) out.faces(f, c) = perm[mesh.faces(f, c)];
    gdd::validate_mesh(out);
    return out;
}

inline std::vector<int> random_permutation(int n, unsigned seed) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::mt19937 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

// Random orthogonal k x k matrix (Haar via QR with positive diagonal).
inline Eigen::MatrixXd random_orthogonal(int k, std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

// Block-orthogonal w.r.t. a +/-1 signature: orthogonal within the +1 columns
// and within the -1 columns, zero across.
inline Eigen::MatrixXd random_block_orthogonal(const std::vector<int>& signature,
                                               std::mt19937& rng) {
    const int k = static_cast<int>(signature.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (int sign : {+1, -1}) {
        std::vector<int> cols;
        for (int j = 0; j < k; ++j)
            if (signature[j] == sign) cols.push_back(j);
        if (cols.empty()) continue;
        Eigen::MatrixXd q = random_orthogonal(static_cast<int>(cols.size()), rng);
        for (std::size_t a = 0; a < cols.size(); ++a)
            for (std::size_t b = 0; b < cols.size(); ++b)
                c(cols[a], cols[b]) = q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    return c;
}

} // namespace gddtest
