#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace gdd {

enum class MeshFormat { Off, PlyAscii, Obj };

// Picks the format from the file extension (.off / .ply / .obj).
MeshFormat format_from_path(const std::string& path);

/// A validated triangle mesh: n vertices, m faces with zero-based indices.
/// Immutable after construction; safe to share across threads.
struct TriangleMesh {
    Eigen::MatrixX3d vertices;
    Eigen::MatrixX3i faces;
    std::vector<std::string> warnings; // non-fatal findings (non-manifold edges, ...)

    Eigen::Index num_vertices() const { return vertices.rows(); }
    Eigen::Index num_faces() const { return faces.rows(); }
};

/// Per-vertex lumped areas; sum equals total surface area.
struct VertexWeights {
    Eigen::VectorXd areas;
};

// Shared incidence tables. Edges are undirected vertex pairs (a < b).
struct MeshAdjacency {
    // CSR vertex -> incident faces
    std::vector<int> vertex_face_offsets;
    std::vector<int> vertex_faces;
    // per face, per corner c: the face across the edge opposite corner c,
    // or -1 on boundary / non-manifold edges
    Eigen::MatrixX3i face_across_edge;

    std::vector<int> faces_of(int v) const {
        return {vertex_faces.begin() + vertex_face_offsets[v],
                vertex_faces.begin() + vertex_face_offsets[v + 1]};
    }
};

MeshAdjacency build_adjacency(const TriangleMesh& mesh);

// Throws ValidationError on bad indices, repeated corners, degenerate faces
// or a disconnected vertex set; appends warnings for non-manifold edges.
void validate_mesh(TriangleMesh& mesh);

TriangleMesh load_mesh(const std::string& path);
TriangleMesh load_mesh(const std::string& path, MeshFormat format);
void write_mesh(const std::string& path, const TriangleMesh& mesh);
void write_mesh(const std::string& path, const TriangleMesh& mesh, MeshFormat format);

VertexWeights vertex_areas(const TriangleMesh& mesh);

double face_area(const TriangleMesh& mesh, int face);
double total_area(const TriangleMesh& mesh);

// FNV-1a over the canonical vertex/face bytes; stable across file formats.
std::uint64_t mesh_content_hash(const TriangleMesh& mesh);
std::string mesh_hash_hex(const TriangleMesh& mesh);

} // namespace gdd
