#include "gdd/geodesics.hpp"
#include "gdd/errors.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <queue>
#include <random>

using namespace gdd;

namespace {

// Independent edge-graph Dijkstra used as an oracle. Works directly on the
// face list, no shared code with the library solvers.
Eigen::VectorXd oracle_graph_distance(const TriangleMesh& mesh, int source) {
    const int n = static_cast<int>(mesh.num_vertices());
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            int a = mesh.faces(f, c), b = mesh.faces(f, (c + 1) % 3);
            double len = (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
            adj[a].push_back({b, len});
            adj[b].push_back({a, len});
        }
    }
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, 1e300);
    dist[source] = 0.0;
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v]) continue;
        for (auto [w, len] : adj[v]) {
            if (d + len < dist[w]) {
                dist[w] = d + len;
                heap.push({dist[w], w});
            }
        }
    }
    return dist;
}

int grid_vertex(int res, double x, double y) {
    int i = static_cast<int>(std::lround(x * (res - 1)));
    int j = static_cast<int>(std::lround(y * (res - 1)));
    return j * res + i;
}

bool has_obtuse_triangle(const TriangleMesh& mesh) {
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, c));
            Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, (c + 1) % 3));
            Eigen::Vector3d d = mesh.vertices.row(mesh.faces(f, (c + 2) % 3));
            if ((b - a).dot(d - a) < 0.0) return true;
        }
    }
    return false;
}

} // namespace

TEST_SUITE("geodesics") {

TEST_CASE("distance at the source is zero") {
    TriangleMesh mesh = gddtest::grid_mesh(8);
    for (auto solver : {GeodesicSolver::FastMarching, GeodesicSolver::Dijkstra}) {
        DistanceField field = geodesic_from(mesh, 17, solver);
        CHECK(field.values[17] == 0.0);
        CHECK(field.values.minCoeff() >= 0.0);
    }
}

TEST_CASE("fast marching reaches the opposite corner of the unit square within 5%") {
    const int res = 41;
    TriangleMesh mesh = gddtest::grid_mesh(res);
    DistanceField field = geodesic_from(mesh, grid_vertex(res, 0, 0), GeodesicSolver::FastMarching);
    const double truth = std::sqrt(2.0);
    CHECK(field.values[grid_vertex(res, 1, 1)] == doctest::Approx(truth).epsilon(0.05));
}

TEST_CASE("dijkstra matches the brute-force grid-graph oracle and its distortion bound") {
    const int res = 21;
    TriangleMesh mesh = gddtest::grid_mesh(res);
    const int src = grid_vertex(res, 0, 0);
    const int dst = grid_vertex(res, 1, 1);

    Eigen::VectorXd oracle = oracle_graph_distance(mesh, src);
    DistanceField dij = geodesic_from(mesh, src, GeodesicSolver::Dijkstra);
    CHECK((dij.values - oracle).cwiseAbs().maxCoeff() <= 1e-12);

    DistanceField fm = geodesic_from(mesh, src, GeodesicSolver::FastMarching);
    const double truth = std::sqrt(2.0);
    CHECK(dij.values[dst] >= fm.values[dst] - 1e-9);
    CHECK(dij.values[dst] <= (2.0 / std::sqrt(2.0)) * truth + 1e-12);
}

TEST_CASE("fast marching error shrinks under grid refinement") {
    // off-axis target so neither the axes nor the diagonal carry the path
    const double truth = std::sqrt(1.0 + 0.6 * 0.6);
    double prev_err = 1e300;
    for (int res : {11, 21, 41}) {
        TriangleMesh mesh = gddtest::grid_mesh(res);
        DistanceField field =
            geodesic_from(mesh, grid_vertex(res, 0, 0), GeodesicSolver::FastMarching);
        const double err = std::abs(field.values[grid_vertex(res, 1, 0.6)] - truth);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err <= 0.05 * truth);
}

TEST_CASE("obtuse triangles are handled: jittered planar grid stays near Euclidean") {
    TriangleMesh mesh = gddtest::jittered_grid(17, 3);
    REQUIRE(has_obtuse_triangle(mesh));
    const int src = 0;
    DistanceField field = geodesic_from(mesh, src, GeodesicSolver::FastMarching);
    double worst = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const double truth = (mesh.vertices.row(v) - mesh.vertices.row(src)).norm();
        if (truth < 0.3) continue; // skip the near field where h dominates
        worst = std::max(worst, std::abs(field.values[v] - truth) / truth);
    }
    CHECK(worst <= 0.05);
}

TEST_CASE("rejects an out-of-range source") {
    TriangleMesh mesh = gddtest::grid_mesh(4);
    CHECK_THROWS_AS(geodesic_from(mesh, -1, GeodesicSolver::Dijkstra), ValidationError);
    CHECK_THROWS_AS(geodesic_from(mesh, 16, GeodesicSolver::Dijkstra), ValidationError);
}

TEST_CASE("FPS base cases") {
    TriangleMesh mesh = gddtest::grid_mesh(6);
    SampleSet one = farthest_point_sampling(mesh, 1, 7);
    CHECK(one.indices == std::vector<int>{7});
    CHECK(one.covering_radius > 0.0);

    SampleSet all = farthest_point_sampling(mesh, static_cast<int>(mesh.num_vertices()), 0);
    CHECK(all.indices.size() == static_cast<std::size_t>(mesh.num_vertices()));
    CHECK(all.covering_radius == 0.0);

    CHECK_THROWS_AS(farthest_point_sampling(mesh, 37, 0), ValidationError);
}

TEST_CASE("FPS second sample is the far corner (brute-force argmax)") {
    const int res = 11;
    TriangleMesh mesh = gddtest::grid_mesh(res);
    const int seed = grid_vertex(res, 0, 0);
    SampleSet set = farthest_point_sampling(mesh, 2, seed);

    DistanceField field = geodesic_from(mesh, seed, GeodesicSolver::FastMarching);
    int argmax = 0;
    for (int v = 1; v < mesh.num_vertices(); ++v)
        if (field.values[v] > field.values[argmax]) argmax = v;
    CHECK(set.indices[1] == argmax);
    CHECK(set.indices[1] == grid_vertex(res, 1, 1));
}

TEST_CASE("FPS is deterministic and its covering radius shrinks with p") {
    TriangleMesh mesh = gddtest::bumpy_sphere(2);
    SampleSet a = farthest_point_sampling(mesh, 12, 5);
    SampleSet b = farthest_point_sampling(mesh, 12, 5);
    CHECK(a.indices == b.indices);
    CHECK(a.covering_radius == b.covering_radius);

    double prev = 1e300;
    for (int p : {2, 4, 8, 16, 32}) {
        SampleSet s = farthest_point_sampling(mesh, p, 5);
        CHECK(s.covering_radius <= prev + 1e-15);
        prev = s.covering_radius;
    }
}

TEST_CASE("geodesic_rows stacks single-source fields") {
    TriangleMesh mesh = gddtest::grid_mesh(7);
    std::vector<int> sources = {3, 11, 40};
    Eigen::MatrixXd rows = geodesic_rows(mesh, sources, GeodesicSolver::FastMarching);
    REQUIRE(rows.rows() == 3);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        DistanceField f = geodesic_from(mesh, sources[i], GeodesicSolver::FastMarching);
        CHECK((rows.row(static_cast<Eigen::Index>(i)).transpose() - f.values)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(rows(static_cast<Eigen::Index>(i), sources[i]) == 0.0);
    }
}

TEST_CASE("two-way fast-marching distances agree within 2%") {
    TriangleMesh mesh = gddtest::grid_mesh(15);
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(mesh.num_vertices()) - 1);
    double max_dist = 0.0, worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        double ab = geodesic_from(mesh, a, GeodesicSolver::FastMarching).values[b];
        double ba = geodesic_from(mesh, b, GeodesicSolver::FastMarching).values[a];
        max_dist = std::max({max_dist, ab, ba});
        worst = std::max(worst, std::abs(ab - ba));
    }
    CHECK(worst <= 0.02 * max_dist);
}

TEST_CASE("symmetrize_sample_columns averages both directions") {
    Eigen::MatrixXd rows(2, 4);
    rows << 0.0, 1.0, 2.0, 3.0,
            1.5, 0.5, 0.0, 4.0;
    std::vector<int> samples = {0, 2};
    symmetrize_sample_columns(rows, samples);
    CHECK(rows(0, 2) == doctest::Approx(1.75)); // avg(2.0, 1.5)
    CHECK(rows(1, 0) == doctest::Approx(1.75));
    CHECK(rows(0, 0) == 0.0);
    CHECK(rows(1, 2) == 0.0);
    CHECK(rows(0, 1) == 1.0); // non-sample columns untouched
    CHECK(rows(1, 3) == 4.0);
}

} // TEST_SUITE
