#include "gdd/mesh.hpp"

#include "gdd/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace gdd {

namespace {

std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Line-oriented reader that tracks the current line number for error
// messages and skips blanks and '#' comments.
class LineReader {
public:
    LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    bool next_tokens(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            tokens.clear();
            std::istringstream ss(line);
            std::string tok;
            while (ss >> tok) tokens.push_back(tok);
            if (!tokens.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path_ + ":" + std::to_string(line_) + ": " + what);
    }

    int line() const { return line_; }

private:
    std::istream& in_;
    std::string path_;
    int line_ = 0;
};

double parse_real(const LineReader& r, const std::string& tok) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        r.fail("expected a number, got '" + tok + "'");
    }
}

long parse_int(const LineReader& r, const std::string& tok) {
    try {
        std::size_t used = 0;
        long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        r.fail("expected an integer, got '" + tok + "'");
    }
}

TriangleMesh parse_off(std::istream& in, const std::string& path) {
    LineReader r(in, path);
    std::vector<std::string> tok;
    if (!r.next_tokens(tok)) r.fail("empty file");
    if (tok[0] != "OFF") r.fail("missing OFF header");

    long n = -1, m = -1;
    if (tok.size() >= 3) {
        // counts on the header line (a common variant)
        n = parse_int(r, tok[1]);
        m = parse_int(r, tok[2]);
    } else {
        if (!r.next_tokens(tok) || tok.size() < 2) r.fail("missing vertex/face counts");
        n = parse_int(r, tok[0]);
        m = parse_int(r, tok[1]);
    }
    if (n < 0 || m < 0) r.fail("negative element count");

    TriangleMesh mesh;
    mesh.vertices.resize(n, 3);
    for (long i = 0; i < n; ++i) {
        if (!r.next_tokens(tok))
            throw ParseError(path + ": header declares " + std::to_string(n) +
                             " vertices but the file ends after " + std::to_string(i));
        if (tok.size() < 3) r.fail("vertex line needs 3 coordinates");
        for (int c = 0; c < 3; ++c) mesh.vertices(i, c) = parse_real(r, tok[c]);
    }
    mesh.faces.resize(m, 3);
    for (long f = 0; f < m; ++f) {
        if (!r.next_tokens(tok))
            throw ParseError(path + ": header declares " + std::to_string(m) +
                             " faces but the file ends after " + std::to_string(f));
        long cnt = parse_int(r, tok[0]);
        if (cnt != 3) r.fail("only triangle faces are supported, got a face of size " +
                             std::to_string(cnt));
        if (static_cast<long>(tok.size()) < 1 + cnt) r.fail("truncated face line");
        for (int c = 0; c < 3; ++c) mesh.faces(f, c) = static_cast<int>(parse_int(r, tok[c + 1]));
    }
    return mesh;
}

TriangleMesh parse_ply(std::istream& in, const std::string& path) {
    LineReader r(in, path);
    std::vector<std::string> tok;
    if (!r.next_tokens(tok) || tok[0] != "ply") r.fail("missing ply magic");

    long n = -1, m = -1;
    bool ascii = false;
    std::string current_element;
    // counts properties per element so vertex lines with extra columns
    // (normals, colors) still parse
    long vertex_props = 0;
    bool saw_format = false;
    while (r.next_tokens(tok)) {
        if (tok[0] == "format") {
            if (tok.size() < 2) r.fail("malformed format line");
            if (tok[1] != "ascii")
                throw ParseError(path + ": binary PLY is not supported, only ascii 1.0");
            ascii = true;
            saw_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() < 3) r.fail("malformed element line");
            current_element = tok[1];
            if (tok[1] == "vertex") n = parse_int(r, tok[2]);
            else if (tok[1] == "face") m = parse_int(r, tok[2]);
        } else if (tok[0] == "property") {
            if (current_element == "vertex" && tok.size() >= 2 && tok[1] != "list")
                ++vertex_props;
        } else if (tok[0] == "end_header") {
            break;
        } else if (tok[0] == "comment" || tok[0] == "obj_info") {
            // ignore
        } else {
            r.fail("unexpected header keyword '" + tok[0] + "'");
        }
    }
    if (!saw_format || !ascii) r.fail("missing 'format ascii 1.0' line");
    if (n < 0) r.fail("missing 'element vertex' declaration");
    if (m < 0) r.fail("missing 'element face' declaration");
    if (vertex_props < 3) r.fail("vertex element needs at least x y z properties");

    TriangleMesh mesh;
    mesh.vertices.resize(n, 3);
    for (long i = 0; i < n; ++i) {
        if (!r.next_tokens(tok))
            throw ParseError(path + ": header declares " + std::to_string(n) +
                             " vertices but the file ends after " + std::to_string(i));
        if (static_cast<long>(tok.size()) < 3) r.fail("vertex line needs 3 coordinates");
        for (int c = 0; c < 3; ++c) mesh.vertices(i, c) = parse_real(r, tok[c]);
    }
    mesh.faces.resize(m, 3);
    for (long f = 0; f < m; ++f) {
        if (!r.next_tokens(tok))
            throw ParseError(path + ": header declares " + std::to_string(m) +
                             " faces but the file ends after " + std::to_string(f));
        long cnt = parse_int(r, tok[0]);
        if (cnt != 3) r.fail("only triangle faces are supported, got a face of size " +
                             std::to_string(cnt));
        if (static_cast<long>(tok.size()) < 1 + cnt) r.fail("truncated face line");
        for (int c = 0; c < 3; ++c) mesh.faces(f, c) = static_cast<int>(parse_int(r, tok[c + 1]));
    }
    return mesh;
}

TriangleMesh parse_obj(std::istream& in, const std::string& path) {
    LineReader r(in, path);
    std::vector<std::string> tok;
    std::vector<std::array<double, 3>> verts;
    std::vector<std::array<long, 3>> faces;
    while (r.next_tokens(tok)) {
        if (tok[0] == "v") {
            if (tok.size() < 4) r.fail("vertex line needs 3 coordinates");
            verts.push_back({parse_real(r, tok[1]), parse_real(r, tok[2]), parse_real(r, tok[3])});
        } else if (tok[0] == "f") {
            if (tok.size() != 4) r.fail("only triangle faces are supported");
            std::array<long, 3> f{};
            for (int c = 0; c < 3; ++c) {
                // accept i, i/t, i/t/n, i//n
                std::string head = tok[c + 1].substr(0, tok[c + 1].find('/'));
                long idx = parse_int(r, head);
                if (idx < 0) idx = static_cast<long>(verts.size()) + 1 + idx; // relative indexing
                if (idx < 1) r.fail("face index out of range: " + tok[c + 1]);
                f[c] = idx - 1; // OBJ is 1-based
            }
            faces.push_back(f);
        }
        // vt/vn/usemtl/groups are ignored
    }
    TriangleMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i)
        for (int c = 0; c < 3; ++c) mesh.vertices(static_cast<Eigen::Index>(i), c) = verts[i][c];
    mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int c = 0; c < 3; ++c) mesh.faces(static_cast<Eigen::Index>(f), c) =
            static_cast<int>(faces[f][c]);
    return mesh;
}

void write_real(std::ostream& out, double v) {
    char buf[64];
    auto res = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.write(buf, res);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

MeshFormat format_from_path(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "off") return MeshFormat::Off;
    if (ext == "ply") return MeshFormat::PlyAscii;
    if (ext == "obj") return MeshFormat::Obj;
    throw ParseError(path + ": unknown mesh extension '." + ext + "' (expected off/ply/obj)");
}

double face_area(const TriangleMesh& mesh, int face) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.faces(face, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.faces(face, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.faces(face, 2));
    return 0.5 * (b - a).cross(c - a).norm();
}

double total_area(const TriangleMesh& mesh) {
    double sum = 0.0;
    for (int f = 0; f < mesh.num_faces(); ++f) sum += face_area(mesh, f);
    return sum;
}

void validate_mesh(TriangleMesh& mesh) {
    const int n = static_cast<int>(mesh.num_vertices());
    const int m = static_cast<int>(mesh.num_faces());
    if (n == 0) throw ValidationError("mesh has no vertices");

    for (int f = 0; f < m; ++f) {
        for (int c = 0; c < 3; ++c) {
            int v = mesh.faces(f, c);
            if (v < 0 || v >= n)
                throw ValidationError("face " + std::to_string(f) + " references vertex " +
                                      std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
        }
        if (mesh.faces(f, 0) == mesh.faces(f, 1) || mesh.faces(f, 1) == mesh.faces(f, 2) ||
            mesh.faces(f, 0) == mesh.faces(f, 2))
            throw ValidationError("face " + std::to_string(f) + " repeats a vertex index");
    }

    const double diag = (mesh.vertices.colwise().maxCoeff() -
                         mesh.vertices.colwise().minCoeff()).norm();
    const double min_area = 1e-12 * diag * diag;
    for (int f = 0; f < m; ++f) {
        if (!(face_area(mesh, f) > min_area))
            throw ValidationError("face " + std::to_string(f) + " is degenerate (area " +
                                  std::to_string(face_area(mesh, f)) + ")");
    }

    // single connected component via face edges
    UnionFind uf(n);
    for (int f = 0; f < m; ++f) {
        uf.unite(mesh.faces(f, 0), mesh.faces(f, 1));
        uf.unite(mesh.faces(f, 1), mesh.faces(f, 2));
    }
    const int root = uf.find(0);
    for (int v = 0; v < n; ++v) {
        if (uf.find(v) != root)
            throw ValidationError("mesh is disconnected: vertex " + std::to_string(v) +
                                  " is not reachable from vertex 0");
    }

    // non-manifold edges get a warning, not an error
    std::map<std::pair<int, int>, int> edge_count;
    for (int f = 0; f < m; ++f) {
        for (int c = 0; c < 3; ++c) {
            int a = mesh.faces(f, c), b = mesh.faces(f, (c + 1) % 3);
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
    }
    for (const auto& [edge, count] : edge_count) {
        if (count > 2)
            mesh.warnings.push_back("non-manifold edge (" + std::to_string(edge.first) + ", " +
                                    std::to_string(edge.second) + ") shared by " +
                                    std::to_string(count) + " faces");
    }
}

MeshAdjacency build_adjacency(const TriangleMesh& mesh) {
    const int n = static_cast<int>(mesh.num_vertices());
    const int m = static_cast<int>(mesh.num_faces());
    MeshAdjacency adj;
    adj.vertex_face_offsets.assign(n + 1, 0);
    for (int f = 0; f < m; ++f)
        for (int c = 0; c < 3; ++c) ++adj.vertex_face_offsets[mesh.faces(f, c) + 1];
    for (int v = 0; v < n; ++v) adj.vertex_face_offsets[v + 1] += adj.vertex_face_offsets[v];
    adj.vertex_faces.resize(adj.vertex_face_offsets[n]);
    {
        std::vector<int> cursor(adj.vertex_face_offsets.begin(), adj.vertex_face_offsets.end() - 1);
        for (int f = 0; f < m; ++f)
            for (int c = 0; c < 3; ++c) adj.vertex_faces[cursor[mesh.faces(f, c)]++] = f;
    }

    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (int f = 0; f < m; ++f) {
        for (int c = 0; c < 3; ++c) {
            int a = mesh.faces(f, c), b = mesh.faces(f, (c + 1) % 3);
            edge_faces[{std::min(a, b), std::max(a, b)}].push_back(f);
        }
    }
    adj.face_across_edge.setConstant(m, 3, -1);
    for (int f = 0; f < m; ++f) {
        for (int corner = 0; corner < 3; ++corner) {
            // edge opposite `corner` joins the other two corners
            int a = mesh.faces(f, (corner + 1) % 3), b = mesh.faces(f, (corner + 2) % 3);
            const auto& fs = edge_faces[{std::min(a, b), std::max(a, b)}];
            if (fs.size() == 2) adj.face_across_edge(f, corner) = fs[0] == f ? fs[1] : fs[0];
            // boundary (1 face) and non-manifold (>2) edges stay -1
        }
    }
    return adj;
}

TriangleMesh load_mesh(const std::string& path) {
    return load_mesh(path, format_from_path(path));
}

TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    TriangleMesh mesh;
    switch (format) {
        case MeshFormat::Off: mesh = parse_off(in, path); break;
        case MeshFormat::PlyAscii: mesh = parse_ply(in, path); break;
        case MeshFormat::Obj: mesh = parse_obj(in, path); break;
    }
    validate_mesh(mesh);
    return mesh;
}

void write_mesh(const std::string& path, const TriangleMesh& mesh) {
    write_mesh(path, mesh, format_from_path(path));
}

void write_mesh(const std::string& path, const TriangleMesh& mesh, MeshFormat format) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    const auto n = mesh.num_vertices();
    const auto m = mesh.num_faces();
    switch (format) {
        case MeshFormat::Off:
            out << "OFF\n" << n << " " << m << " 0\n";
            for (Eigen::Index i = 0; i < n; ++i) {
                write_real(out, mesh.vertices(i, 0)); out << ' ';
                write_real(out, mesh.vertices(i, 1)); out << ' ';
                write_real(out, mesh.vertices(i, 2)); out << '\n';
            }
            for (Eigen::Index f = 0; f < m; ++f)
                out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' '
                    << mesh.faces(f, 2) << '\n';
            break;
        case MeshFormat::PlyAscii:
            out << "ply\nformat ascii 1.0\n"
                << "element vertex " << n << "\n"
                << "property double x\nproperty double y\nproperty double z\n"
                << "element face " << m << "\n"
                << "property list uchar int vertex_indices\nend_header\n";
            for (Eigen::Index i = 0; i < n; ++i) {
                write_real(out, mesh.vertices(i, 0)); out << ' ';
                write_real(out, mesh.vertices(i, 1)); out << ' ';
                write_real(out, mesh.vertices(i, 2)); out << '\n';
            }
            for (Eigen::Index f = 0; f < m; ++f)
                out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' '
                    << mesh.faces(f, 2) << '\n';
            break;
        case MeshFormat::Obj:
            for (Eigen::Index i = 0; i < n; ++i) {
                out << "v ";
                write_real(out, mesh.vertices(i, 0)); out << ' ';
                write_real(out, mesh.vertices(i, 1)); out << ' ';
                write_real(out, mesh.vertices(i, 2)); out << '\n';
            }
            for (Eigen::Index f = 0; f < m; ++f)
                out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
                    << mesh.faces(f, 2) + 1 << '\n';
            break;
    }
    if (!out) throw ParseError("write failed for " + path);
}

VertexWeights vertex_areas(const TriangleMesh& mesh) {
    VertexWeights w;
    w.areas = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const double third = face_area(mesh, f) / 3.0;
        for (int c = 0; c < 3; ++c) w.areas[mesh.faces(f, c)] += third;
    }
    return w;
}

std::uint64_t mesh_content_hash(const TriangleMesh& mesh) {
    std::uint64_t h = 1469598103934665603ull; // FNV offset basis
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull; // FNV prime
        }
    };
    std::int64_t n = mesh.num_vertices(), m = mesh.num_faces();
    mix_bytes(&n, sizeof(n));
    mix_bytes(&m, sizeof(m));
    for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i)
        for (int c = 0; c < 3; ++c) {
            double v = mesh.vertices(i, c);
            mix_bytes(&v, sizeof(v));
        }
    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f)
        for (int c = 0; c < 3; ++c) {
            std::int32_t v = mesh.faces(f, c);
            mix_bytes(&v, sizeof(v));
        }
    return h;
}

std::string mesh_hash_hex(const TriangleMesh& mesh) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(mesh_content_hash(mesh)));
    return buf;
}

} // namespace gdd
