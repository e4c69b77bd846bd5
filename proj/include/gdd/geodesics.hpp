#pragma once

#include "gdd/mesh.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace gdd {

enum class GeodesicSolver { FastMarching, Dijkstra };

GeodesicSolver solver_from_string(const std::string& name);
std::string to_string(GeodesicSolver solver);

/// First-arrival distances from one source vertex to every vertex.
struct DistanceField {
    int source = 0;
    Eigen::VectorXd values;
};

/// Ordered greedy sample of p vertices plus the covering radius of the set.
struct SampleSet {
    std::vector<int> indices;
    double covering_radius = 0.0;
};

// Single-source distances. FastMarching solves the triangle eikonal update
// (obtuse stencils are unfolded across the opposing edge); Dijkstra walks
// the edge graph.
DistanceField geodesic_from(const TriangleMesh& mesh, int source, GeodesicSolver solver);

// Same, reusing a prebuilt adjacency (the adjacency build dominates for
// repeated sources on the same mesh).
DistanceField geodesic_from(const TriangleMesh& mesh, const MeshAdjacency& adjacency,
                            int source, GeodesicSolver solver);

// Greedy farthest point sampling seeded at seed_vertex; ties broken by
// lowest vertex index.
SampleSet farthest_point_sampling(const TriangleMesh& mesh, int p, int seed_vertex,
                                  GeodesicSolver solver = GeodesicSolver::FastMarching);

// p x n matrix of stacked distance fields; row i corresponds to sources[i].
// Sources are computed independently (and possibly in parallel).
Eigen::MatrixXd geodesic_rows(const TriangleMesh& mesh, const std::vector<int>& sources,
                              GeodesicSolver solver);

// Averages rows(i, samples[j]) with rows(j, samples[i]) in place, for the
// entries where both directions were computed.
void symmetrize_sample_columns(Eigen::MatrixXd& rows, const std::vector<int>& samples);

} // namespace gdd
