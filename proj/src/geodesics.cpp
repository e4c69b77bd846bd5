#include "gdd/geodesics.hpp"

#include "gdd/errors.hpp"
#include "gdd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace gdd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Planar two-point eikonal update. The updated vertex sits at the origin;
// p1, p2 are the 2D positions of the supporting vertices with arrival
// times t1, t2. Returns the arrival time at the origin, or +inf when the
// characteristic does not come from within the (p1, p2) wedge.
double two_point_update(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        double t1, double t2) {
    if (!std::isfinite(t1) || !std::isfinite(t2)) return kInf;
    const double e11 = p1.squaredNorm();
    const double e22 = p2.squaredNorm();
    const double e12 = p1.dot(p2);
    const double det = e11 * e22 - e12 * e12;
    if (det <= 0.0) return kInf; // degenerate stencil
    // Q = E^{-1}
    const double q11 = e22 / det, q22 = e11 / det, q12 = -e12 / det;
    const Eigen::Vector2d t(t1, t2);
    // solve (t - s*1)' Q (t - s*1) = 1 for the later arrival s
    const double a = q11 + 2.0 * q12 + q22;
    const double bt = q11 * t1 + q12 * (t1 + t2) + q22 * t2;
    const double c = q11 * t1 * t1 + 2.0 * q12 * t1 * t2 + q22 * t2 * t2 - 1.0;
    const double disc = bt * bt - a * c;
    if (disc < 0.0 || a <= 0.0) return kInf;
    const double s = (bt + std::sqrt(disc)) / a;
    if (s < std::max(t1, t2)) return kInf; // front must reach the apex last
    // upwind check: -grad must point into the wedge, i.e. Q (t - s*1) <= 0
    const double w1 = q11 * (t1 - s) + q12 * (t2 - s);
    const double w2 = q12 * (t1 - s) + q22 * (t2 - s);
    const double tol = 1e-12 * (std::abs(s) + 1.0);
    if (w1 > tol || w2 > tol) return kInf;
    return s;
}

struct FastMarcher {
    const TriangleMesh& mesh;
    const MeshAdjacency& adj;
    Eigen::VectorXd dist;
    using HeapEntry = std::pair<double, int>;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;

    static constexpr int kMaxUnfoldDepth = 12;

    FastMarcher(const TriangleMesh& m, const MeshAdjacency& a) : mesh(m), adj(a) {}

    double edge_length(int a, int b) const {
        return (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
    }

    // Candidate arrival time at `target` supported by the wedge (v1, v2),
    // given their 2D positions in the unfolded frame (target at origin).
    // Obtuse wedges are split by unfolding the face across (v1, v2).
    double wedge_update(int target, int v1, int v2, const Eigen::Vector2d& p1,
                        const Eigen::Vector2d& p2, int face, int depth) {
        if (p1.dot(p2) >= -1e-14 * p1.norm() * p2.norm() || depth <= 0) {
            // acute (or budget exhausted): direct planar update
            return two_point_update(p1, p2, dist[v1], dist[v2]);
        }
        // obtuse: unfold the neighbor across edge (v1, v2) and recurse
        int corner = -1;
        for (int c = 0; c < 3; ++c)
            if (mesh.faces(face, c) != v1 && mesh.faces(face, c) != v2) corner = c;
        const int nb = adj.face_across_edge(face, corner);
        if (nb < 0) return two_point_update(p1, p2, dist[v1], dist[v2]);
        int v3 = -1;
        for (int c = 0; c < 3; ++c) {
            int v = mesh.faces(nb, c);
            if (v != v1 && v != v2) v3 = v;
        }
        if (v3 < 0) return two_point_update(p1, p2, dist[v1], dist[v2]);

        // place v3 in the frame: intersect circles around p1 and p2,
        // picking the side away from the origin (across the edge)
        const double r1 = edge_length(v1, v3);
        const double r2 = edge_length(v2, v3);
        const Eigen::Vector2d d = p2 - p1;
        const double L2 = d.squaredNorm();
        if (L2 <= 0.0) return two_point_update(p1, p2, dist[v1], dist[v2]);
        const double along = (r1 * r1 - r2 * r2 + L2) / (2.0 * L2);
        double h2 = r1 * r1 - along * along * L2;
        if (h2 < 0.0) h2 = 0.0;
        const double h = std::sqrt(h2 / L2);
        const Eigen::Vector2d foot = p1 + along * d;
        const Eigen::Vector2d normal(-d.y(), d.x());
        // origin is on one side of the edge; v3 unfolds to the other
        const double origin_side = (-p1).dot(normal);
        const Eigen::Vector2d p3 = origin_side > 0.0
            ? Eigen::Vector2d(foot - h * normal)
            : Eigen::Vector2d(foot + h * normal);

        const double a = wedge_update(target, v1, v3, p1, p3, nb, depth - 1);
        const double b = wedge_update(target, v3, v2, p3, p2, nb, depth - 1);
        return std::min(a, b);
    }

    // Best candidate for `target` through face `f` (one-point edge fallbacks
    // plus the cone-checked planar update).
    double face_update(int target, int f) {
        int v1 = -1, v2 = -1;
        for (int c = 0; c < 3; ++c) {
            int v = mesh.faces(f, c);
            if (v == target) continue;
            (v1 < 0 ? v1 : v2) = v;
        }
        const double l1 = edge_length(target, v1);
        const double l2 = edge_length(target, v2);
        double best = std::min(dist[v1] + l1, dist[v2] + l2);
        if (std::isfinite(dist[v1]) && std::isfinite(dist[v2])) {
            // local 2D frame with target at the origin
            Eigen::Vector3d e1 = mesh.vertices.row(v1) - mesh.vertices.row(target);
            Eigen::Vector3d e2 = mesh.vertices.row(v2) - mesh.vertices.row(target);
            const double cosang =
                std::clamp(e1.dot(e2) / (l1 * l2), -1.0, 1.0);
            const double sinang = std::sqrt(1.0 - cosang * cosang);
            const Eigen::Vector2d p1(l1, 0.0);
            const Eigen::Vector2d p2(l2 * cosang, l2 * sinang);
            best = std::min(best, wedge_update(target, v1, v2, p1, p2, f, kMaxUnfoldDepth));
        }
        return best;
    }

    Eigen::VectorXd run(int source) {
        const int n = static_cast<int>(mesh.num_vertices());
        dist = Eigen::VectorXd::Constant(n, kInf);
        dist[source] = 0.0;
        heap.push({0.0, source});
        while (!heap.empty()) {
            auto [d, v] = heap.top();
            heap.pop();
            if (d != dist[v]) continue; // stale entry
            for (int fi = adj.vertex_face_offsets[v]; fi < adj.vertex_face_offsets[v + 1]; ++fi) {
                const int f = adj.vertex_faces[fi];
                for (int c = 0; c < 3; ++c) {
                    const int w = mesh.faces(f, c);
                    if (w == v) continue;
                    const double cand = face_update(w, f);
                    if (cand < dist[w] * (1.0 - 1e-14)) {
                        dist[w] = cand;
                        heap.push({cand, w}); // reopens settled vertices if improved
                    }
                }
            }
        }
        return dist;
    }
};

Eigen::VectorXd dijkstra_run(const TriangleMesh& mesh, const MeshAdjacency& adj, int source) {
    const int n = static_cast<int>(mesh.num_vertices());
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, kInf);
    std::vector<char> done(n, 0);
    using HeapEntry = std::pair<double, int>;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;
    dist[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (done[v]) continue;
        done[v] = 1;
        for (int fi = adj.vertex_face_offsets[v]; fi < adj.vertex_face_offsets[v + 1]; ++fi) {
            const int f = adj.vertex_faces[fi];
            for (int c = 0; c < 3; ++c) {
                const int w = mesh.faces(f, c);
                if (w == v || done[w]) continue;
                const double cand = d + (mesh.vertices.row(w) - mesh.vertices.row(v)).norm();
                if (cand < dist[w]) {
                    dist[w] = cand;
                    heap.push({cand, w});
                }
            }
        }
    }
    return dist;
}

} // namespace

GeodesicSolver solver_from_string(const std::string& name) {
    if (name == "fast_marching" || name == "fm") return GeodesicSolver::FastMarching;
    if (name == "dijkstra") return GeodesicSolver::Dijkstra;
    throw ValidationError("unknown geodesic solver '" + name +
                          "' (expected fast_marching or dijkstra)");
}

std::string to_string(GeodesicSolver solver) {
    return solver == GeodesicSolver::FastMarching ? "fast_marching" : "dijkstra";
}

DistanceField geodesic_from(const TriangleMesh& mesh, const MeshAdjacency& adj, int source,
                            GeodesicSolver solver) {
    if (source < 0 || source >= mesh.num_vertices())
        throw ValidationError("source vertex " + std::to_string(source) + " outside [0, " +
                              std::to_string(mesh.num_vertices()) + ")");
    DistanceField field;
    field.source = source;
    if (solver == GeodesicSolver::FastMarching) {
        FastMarcher fm(mesh, adj);
        field.values = fm.run(source);
    } else {
        field.values = dijkstra_run(mesh, adj, source);
    }
    if (!field.values.allFinite())
        throw NumericalError("unreachable vertex from source " + std::to_string(source) +
                             " (disconnected mesh?)");
    return field;
}

DistanceField geodesic_from(const TriangleMesh& mesh, int source, GeodesicSolver solver) {
    const MeshAdjacency adj = build_adjacency(mesh);
    return geodesic_from(mesh, adj, source, solver);
}

SampleSet farthest_point_sampling(const TriangleMesh& mesh, int p, int seed_vertex,
                                  GeodesicSolver solver) {
    const int n = static_cast<int>(mesh.num_vertices());
    if (p < 1 || p > n)
        throw ValidationError("sample count " + std::to_string(p) + " outside [1, " +
                              std::to_string(n) + "]");
    if (seed_vertex < 0 || seed_vertex >= n)
        throw ValidationError("seed vertex " + std::to_string(seed_vertex) + " out of range");
    const MeshAdjacency adj = build_adjacency(mesh);

    SampleSet set;
    set.indices.reserve(p);
    set.indices.push_back(seed_vertex);
    Eigen::VectorXd min_dist = geodesic_from(mesh, adj, seed_vertex, solver).values;
    while (static_cast<int>(set.indices.size()) < p) {
        int best = 0;
        for (int v = 1; v < n; ++v)
            if (min_dist[v] > min_dist[best]) best = v; // ties keep the lowest index
        set.indices.push_back(best);
        min_dist = min_dist.cwiseMin(geodesic_from(mesh, adj, best, solver).values);
    }
    set.covering_radius = min_dist.maxCoeff();
    return set;
}

Eigen::MatrixXd geodesic_rows(const TriangleMesh& mesh, const std::vector<int>& sources,
                              GeodesicSolver solver) {
    const MeshAdjacency adj = build_adjacency(mesh);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(sources.size()), mesh.num_vertices());
    parallel_for(sources.size(), [&](std::size_t i) {
        rows.row(static_cast<Eigen::Index>(i)) =
            geodesic_from(mesh, adj, sources[i], solver).values.transpose();
    });
    return rows;
}

void symmetrize_sample_columns(Eigen::MatrixXd& rows, const std::vector<int>& samples) {
    const auto p = static_cast<Eigen::Index>(samples.size());
    if (rows.rows() != p)
        throw ValidationError("row count does not match the sample count");
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            const double avg = 0.5 * (rows(i, samples[j]) + rows(j, samples[i]));
            rows(i, samples[j]) = avg;
            rows(j, samples[i]) = avg;
        }
        rows(i, samples[i]) = 0.0;
    }
}

} // namespace gdd
