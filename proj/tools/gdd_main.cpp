#include "gdd/descriptor.hpp"
#include "gdd/errors.hpp"
#include "gdd/evaluation.hpp"
#include "gdd/geodesics.hpp"
#include "gdd/io.hpp"
#include "gdd/lbo.hpp"
#include "gdd/lowrank.hpp"
#include "gdd/matching.hpp"
#include "gdd/mesh.hpp"
#include "gdd/parallel.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// small shared helpers

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

gdd::GeodesicSolver parse_solver(const std::string& name) {
    if (name == "fm" || name == "fast_marching" || name == "fast-marching")
        return gdd::GeodesicSolver::FastMarching;
    if (name == "dijkstra") return gdd::GeodesicSolver::Dijkstra;
    throw gdd::ValidationError("unknown solver '" + name + "' (expected fm or dijkstra)");
}

const char* solver_name(gdd::GeodesicSolver s) {
    return s == gdd::GeodesicSolver::Dijkstra ? "dijkstra" : "fast_marching";
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

// --threads wins over GDD_THREADS; 0 means hardware concurrency.
void apply_threads(int flag_threads) {
    if (flag_threads >= 0) {
        gdd::set_thread_count(flag_threads);
        return;
    }
    if (const char* env = std::getenv("GDD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0)
            throw gdd::ValidationError(std::string("GDD_THREADS must be a non-negative integer, got '") +
                                       env + "'");
        gdd::set_thread_count(static_cast<int>(v));
    }
}

void note(const std::string& line) { std::cerr << line << '\n'; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// stage cores, shared verbatim between the single-stage subcommands and
// `pipeline` so that running the stages by hand reproduces the pipeline's
// artifacts byte for byte.

gdd::GeodesicBasis truncate_basis(gdd::GeodesicBasis basis, int k) {
    if (k > 0 && k < basis.Q.cols()) {
        basis.Q = basis.Q.leftCols(k).eval();
        basis.eigenvalues = basis.eigenvalues.head(k).eval();
    }
    return basis;
}

gdd::GeodesicBasis basis_stage(const gdd::TriangleMesh& mesh, int p, int k,
                               gdd::GeodesicSolver solver, int seed_vertex) {
    const gdd::GeodesicBasis full = gdd::orthogonalize(gdd::build_factorization(mesh, p, solver, seed_vertex));
    if (k > full.Q.cols())
        note("basis: only " + std::to_string(full.Q.cols()) + " columns available (k=" +
             std::to_string(k) + " requested)");
    return truncate_basis(full, k);
}

json basis_provenance(const gdd::TriangleMesh& mesh, const gdd::GeodesicBasis& basis, int p,
                      gdd::GeodesicSolver solver, int seed_vertex) {
    json j;
    j["cmd"] = "basis";
    j["mesh"] = gdd::mesh_hash_hex(mesh);
    j["p"] = p;
    j["k"] = static_cast<int>(basis.Q.cols());
    j["solver"] = solver_name(solver);
    j["seed_vertex"] = seed_vertex;
    return j;
}

json lbo_provenance(const gdd::TriangleMesh& mesh, int k) {
    json j;
    j["cmd"] = "lbo";
    j["mesh"] = gdd::mesh_hash_hex(mesh);
    j["k"] = k;
    return j;
}

json gdd_provenance(const std::string& basis_file_hash) {
    json j;
    j["cmd"] = "gdd";
    j["basis"] = basis_file_hash;
    return j;
}

// Invert X = Q sqrt(|lambda|); descriptor columns all carry |lambda| > 0.
gdd::GeodesicBasis basis_from_gdd(const gdd::GeodesicDistanceDescriptor& g) {
    gdd::GeodesicBasis basis;
    basis.eigenvalues = g.eigenvalues;
    basis.Q = g.X;
    for (Eigen::Index c = 0; c < basis.Q.cols(); ++c)
        basis.Q.col(c) /= std::sqrt(std::abs(g.eigenvalues[c]));
    return basis;
}

struct MatchParams {
    std::vector<std::string> init;      // mode followed by its file argument(s)
    std::vector<std::string> post_lbo;  // two basis files, or empty
    int k = 50;
    int block = 20;
    double penalty = -1.0;
    int max_iters = 100;
    double tol = 1e-6;
};

struct MatchOutcome {
    gdd::Correspondence corr;
    gdd::IcpResult icp;
    json provenance;
};

// gdd1_hash/gdd2_hash identify the descriptor files (written ones, for the
// pipeline) so the correspondence header pins its exact inputs.
MatchOutcome match_core(const gdd::GeodesicDistanceDescriptor& g1,
                        const gdd::GeodesicDistanceDescriptor& g2, const MatchParams& params,
                        const std::string& gdd1_hash, const std::string& gdd2_hash) {
    if (params.init.empty())
        throw gdd::ValidationError("match: --init is required (landmarks <file> | corr <file> | "
                                   "descriptors <file1> <file2>)");
    const std::string& mode = params.init.front();
    const size_t files = params.init.size() - 1;
    if ((mode == "landmarks" || mode == "corr") && files != 1)
        throw gdd::ValidationError("match: --init " + mode + " takes exactly one file");
    if (mode == "descriptors" && files != 2)
        throw gdd::ValidationError("match: --init descriptors takes exactly two files");
    if (mode != "landmarks" && mode != "corr" && mode != "descriptors")
        throw gdd::ValidationError("match: unknown init mode '" + mode + "'");

    const gdd::SharedDescriptors shared = gdd::shared_signature(g1, g2, params.k);
    if (!shared.signature_compatible)
        note("warning: descriptor signatures differ; matching on the shared blocks only");
    const gdd::GeodesicDistanceDescriptor& t1 = shared.first;
    const gdd::GeodesicDistanceDescriptor& t2 = shared.second;
    const int n1 = static_cast<int>(t1.X.rows());
    const int n2 = static_cast<int>(t2.X.rows());

    json init_prov = json::array();
    init_prov.push_back(mode);
    gdd::Alignment init;
    if (mode == "landmarks") {
        const gdd::LandmarkSet lm = gdd::read_landmarks(params.init[1]);
        for (const auto& [a, b] : lm.pairs)
            if (a >= n1 || b >= n2)
                throw gdd::ValidationError(params.init[1] + ": landmark pair (" + std::to_string(a) +
                                           "," + std::to_string(b) + ") is out of range");
        init = gdd::init_from_landmarks(t1, t2, lm, params.block, params.penalty);
        init_prov.push_back(gdd::file_hash_hex(params.init[1]));
    } else if (mode == "corr") {
        const gdd::Correspondence corr0 = gdd::read_correspondence(params.init[1]);
        if (static_cast<int>(corr0.map.size()) != n1)
            throw gdd::ValidationError(params.init[1] + ": correspondence has " +
                                       std::to_string(corr0.map.size()) + " rows, descriptor has " +
                                       std::to_string(n1));
        for (int t : corr0.map)
            if (t >= n2) throw gdd::ValidationError(params.init[1] + ": target index out of range");
        init = gdd::init_from_correspondence(corr0, t1, t2);
        init_prov.push_back(gdd::file_hash_hex(params.init[1]));
    } else {
        const Eigen::MatrixXd desc1 = gdd::read_matrix_csv(params.init[1]);
        const Eigen::MatrixXd desc2 = gdd::read_matrix_csv(params.init[2]);
        if (desc1.rows() != n1 || desc2.rows() != n2 || desc1.cols() != desc2.cols())
            throw gdd::ValidationError("match: descriptor files must have one row per vertex and "
                                       "matching column counts");
        init = gdd::init_from_descriptors(desc1, desc2, basis_from_gdd(t1), basis_from_gdd(t2));
        init_prov.push_back(gdd::file_hash_hex(params.init[1]));
        init_prov.push_back(gdd::file_hash_hex(params.init[2]));
    }
    for (const std::string& w : init.warnings) note("warning: " + w);

    MatchOutcome out;
    out.icp = gdd::icp_match(t1, t2, init, params.max_iters, params.tol);
    out.corr = out.icp.corr;
    note("match: " + std::to_string(n1) + " vertices, " +
         std::to_string(out.icp.residual_history.size()) + " iterations, rms " +
         fmt(out.icp.rms_residual));

    json j;
    j["cmd"] = "match";
    j["gdd1"] = gdd1_hash;
    j["gdd2"] = gdd2_hash;
    j["init"] = init_prov;
    j["k"] = params.k;
    j["block"] = params.block;
    j["penalty"] = params.penalty;
    j["max_iters"] = params.max_iters;
    j["tol"] = params.tol;

    if (!params.post_lbo.empty()) {
        const gdd::LboBasis phi1 = gdd::read_lbo_basis(params.post_lbo[0]);
        const gdd::LboBasis phi2 = gdd::read_lbo_basis(params.post_lbo[1]);
        if (phi1.Phi.rows() != n1 || phi2.Phi.rows() != n2)
            throw gdd::ValidationError("match: --post-lbo bases do not match the descriptor sizes");
        out.corr = gdd::postprocess_lbo(out.corr, phi1, phi2, params.max_iters, params.tol);
        j["post_lbo"] = {gdd::file_hash_hex(params.post_lbo[0]), gdd::file_hash_hex(params.post_lbo[1])};
    }
    out.provenance = j;
    return out;
}

void check_correspondence_sizes(const gdd::Correspondence& corr, const std::string& label, int n1,
                                int n2) {
    if (static_cast<int>(corr.map.size()) != n1)
        throw gdd::ValidationError(label + ": has " + std::to_string(corr.map.size()) +
                                   " rows, mesh1 has " + std::to_string(n1) + " vertices");
    for (int t : corr.map)
        if (t < 0 || t >= n2)
            throw gdd::ValidationError(label + ": target index " + std::to_string(t) +
                                       " is outside mesh2");
}

json eval_provenance(const gdd::TriangleMesh& mesh1, const gdd::TriangleMesh& mesh2,
                     gdd::GeodesicSolver solver) {
    json j;
    j["cmd"] = "eval";
    j["mesh1"] = gdd::mesh_hash_hex(mesh1);
    j["mesh2"] = gdd::mesh_hash_hex(mesh2);
    j["solver"] = solver_name(solver);
    return j;
}

// ---------------------------------------------------------------------------
// single-stage subcommands

struct GeodesicsOpts {
    std::string mesh, out, solver = "fm";
    std::vector<int> sources;
    int fps = 0;
    int seed_vertex = 0;
    int threads = -1;
};

void run_geodesics(const GeodesicsOpts& o) {
    apply_threads(o.threads);
    const gdd::GeodesicSolver solver = parse_solver(o.solver);
    const gdd::TriangleMesh mesh = gdd::load_mesh(o.mesh);
    const int n = static_cast<int>(mesh.vertices.rows());

    std::vector<int> sources = o.sources;
    json j;
    j["cmd"] = "geodesics";
    j["mesh"] = gdd::mesh_hash_hex(mesh);
    j["solver"] = solver_name(solver);
    if (o.fps > 0) {
        sources = gdd::farthest_point_sampling(mesh, o.fps, o.seed_vertex, solver).indices;
        j["fps"] = o.fps;
        j["seed_vertex"] = o.seed_vertex;
    }
    if (sources.empty())
        throw gdd::ValidationError("geodesics: give at least one --source or --fps p");
    for (int s : sources)
        if (s < 0 || s >= n)
            throw gdd::ValidationError("geodesics: source " + std::to_string(s) +
                                       " is outside the mesh (n=" + std::to_string(n) + ")");
    j["sources"] = sources;

    const Eigen::MatrixXd rows = gdd::geodesic_rows(mesh, sources, solver);
    gdd::write_matrix_csv(o.out, rows, j.dump());
    note("geodesics: " + std::to_string(sources.size()) + " rows x " + std::to_string(n) +
         " vertices -> " + o.out);
}

struct BasisOpts {
    std::string mesh, out, solver = "fm";
    int samples = 100, k = 50, seed_vertex = 0, threads = -1;
};

void run_basis(const BasisOpts& o) {
    apply_threads(o.threads);
    const gdd::GeodesicSolver solver = parse_solver(o.solver);
    const gdd::TriangleMesh mesh = gdd::load_mesh(o.mesh);
    const gdd::GeodesicBasis basis = basis_stage(mesh, o.samples, o.k, solver, o.seed_vertex);
    gdd::write_basis(o.out, basis, basis_provenance(mesh, basis, o.samples, solver, o.seed_vertex).dump());
    note("basis: " + std::to_string(basis.Q.cols()) + " columns from p=" + std::to_string(o.samples) +
         " -> " + o.out);
}

struct LboOpts {
    std::string mesh, out;
    int k = 50, threads = -1;
};

void run_lbo(const LboOpts& o) {
    apply_threads(o.threads);
    const gdd::TriangleMesh mesh = gdd::load_mesh(o.mesh);
    const gdd::LboBasis basis = gdd::lbo_eigenbasis(gdd::build_laplacian(mesh), o.k);
    gdd::write_lbo_basis(o.out, basis, lbo_provenance(mesh, o.k).dump());
    note("lbo: " + std::to_string(basis.Phi.cols()) + " eigenfunctions -> " + o.out);
}

struct GddOpts {
    std::string basis, out;
    int threads = -1;
};

void run_gdd(const GddOpts& o) {
    apply_threads(o.threads);
    const gdd::GeodesicBasis basis = gdd::read_basis(o.basis);
    const gdd::GeodesicDistanceDescriptor g = gdd::build_gdd(basis);
    gdd::write_gdd(o.out, g, gdd_provenance(gdd::file_hash_hex(o.basis)).dump());
    note("gdd: " + std::to_string(g.X.rows()) + " x " + std::to_string(g.X.cols()) + " -> " + o.out);
}

struct MatchOpts {
    std::string gdd1, gdd2, out;
    MatchParams params;
    int threads = -1;
};

void run_match(const MatchOpts& o) {
    apply_threads(o.threads);
    const gdd::GeodesicDistanceDescriptor g1 = gdd::read_gdd(o.gdd1);
    const gdd::GeodesicDistanceDescriptor g2 = gdd::read_gdd(o.gdd2);
    const MatchOutcome m =
        match_core(g1, g2, o.params, gdd::file_hash_hex(o.gdd1), gdd::file_hash_hex(o.gdd2));
    gdd::write_correspondence(o.out, m.corr, m.provenance.dump());
    note("match: wrote " + o.out);
}

struct EvalOpts {
    std::string mesh1, mesh2, truth, curve_out, objective_out, solver = "fm";
    std::vector<std::string> corrs;
    int samples = 1000;
    int seed = 0;
    int threads = -1;
};

void run_eval(const EvalOpts& o) {
    apply_threads(o.threads);
    if (o.curve_out.empty() && o.objective_out.empty())
        throw CLI::ValidationError("eval", "nothing to do: give --curve-out and/or --objective");
    if (!o.curve_out.empty() && o.truth.empty())
        throw CLI::ValidationError("eval", "--curve-out needs --truth");
    if (!o.curve_out.empty() && o.corrs.size() != 1)
        throw CLI::ValidationError("eval", "--curve-out needs exactly one --corr file");

    const gdd::GeodesicSolver solver = parse_solver(o.solver);
    const gdd::TriangleMesh mesh1 = gdd::load_mesh(o.mesh1);
    const gdd::TriangleMesh mesh2 = gdd::load_mesh(o.mesh2);
    const int n1 = static_cast<int>(mesh1.vertices.rows());
    const int n2 = static_cast<int>(mesh2.vertices.rows());

    gdd::Correspondence truth;
    if (!o.truth.empty()) {
        truth = gdd::read_correspondence(o.truth);
        check_correspondence_sizes(truth, o.truth, n1, n2);
    }
    std::vector<std::pair<std::string, gdd::Correspondence>> named;
    for (const std::string& path : o.corrs) {
        gdd::Correspondence corr = gdd::read_correspondence(path);
        check_correspondence_sizes(corr, path, n1, n2);
        named.emplace_back(stem(path), std::move(corr));
    }

    if (!o.curve_out.empty()) {
        const gdd::DistortionCurve curve =
            gdd::distortion_curve(named.front().second, truth, mesh2, gdd::default_thresholds(), solver);
        json j = eval_provenance(mesh1, mesh2, solver);
        j["truth"] = gdd::file_hash_hex(o.truth);
        j["corr"] = gdd::file_hash_hex(o.corrs.front());
        gdd::write_curve(o.curve_out, curve, j.dump());
        note("eval: curve -> " + o.curve_out);
    }
    if (!o.objective_out.empty()) {
        if (named.empty()) throw CLI::ValidationError("eval", "--objective needs at least one --corr");
        const int samples = std::min(o.samples, std::min(n1, n2));
        if (samples < o.samples)
            note("eval: sample size clamped to " + std::to_string(samples) + " (mesh size)");
        const auto rows = gdd::objective_table(named, mesh1, mesh2, samples,
                                               static_cast<unsigned>(o.seed), solver);
        json j = eval_provenance(mesh1, mesh2, solver);
        j["samples"] = samples;
        j["seed"] = o.seed;
        json pins = json::array();
        for (const std::string& path : o.corrs) pins.push_back({stem(path), gdd::file_hash_hex(path)});
        j["corr"] = pins;
        gdd::write_objective(o.objective_out, rows, j.dump());
        note("eval: objective -> " + o.objective_out);
    }
}

struct ReconOpts {
    std::string mesh, out, solver = "fm";
    std::vector<std::string> bases;
    int probes = 2000;
    int seed = 0;
    int threads = -1;
};

void run_recon_curve(const ReconOpts& o) {
    apply_threads(o.threads);
    const gdd::GeodesicSolver solver = parse_solver(o.solver);
    const gdd::TriangleMesh mesh = gdd::load_mesh(o.mesh);
    const int n = static_cast<int>(mesh.vertices.rows());
    if (n > 4000)
        throw gdd::ValidationError("recon-curve: needs the dense distance matrix, mesh too large (n=" +
                                   std::to_string(n) + " > 4000)");
    if (o.probes < 1) throw CLI::ValidationError("recon-curve", "--probes must be positive");

    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    Eigen::MatrixXd D = gdd::geodesic_rows(mesh, all, solver);
    D = 0.5 * (D + D.transpose()).eval();

    // Basis files may hold either kind; LBO bases are lifted to the same
    // footing via the Rayleigh-Ritz restriction of D to their span.
    std::vector<gdd::GeodesicBasis> bases;
    std::vector<std::string> names;
    for (const std::string& path : o.bases) {
        std::string header;
        gdd::read_matrix_csv(path, &header);
        const json h = json::parse(header, nullptr, false);
        const std::string kind = h.is_discarded() ? "" : h.value("kind", "");
        if (kind == "basis") {
            bases.push_back(gdd::read_basis(path));
        } else if (kind == "lbo") {
            bases.push_back(gdd::projected_basis(D, gdd::read_lbo_basis(path).Phi));
        } else {
            throw gdd::ParseError(path + ": not a basis or lbo artifact");
        }
        names.push_back(stem(path));
    }

    std::mt19937 rng(static_cast<unsigned>(o.seed));
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<gdd::ProbeEntry> probe(static_cast<size_t>(o.probes));
    for (auto& e : probe) {
        e.i = pick(rng);
        e.j = pick(rng);
        e.d = D(e.i, e.j);
    }
    const auto errors = gdd::reconstruction_error_curve(bases, probe);

    // Rectangular table over the k range every basis covers.
    size_t kmax = errors.front().size();
    for (const auto& col : errors) kmax = std::min(kmax, col.size());

    json j;
    j["cmd"] = "recon-curve";
    j["mesh"] = gdd::mesh_hash_hex(mesh);
    j["solver"] = solver_name(solver);
    j["probes"] = o.probes;
    j["seed"] = o.seed;
    j["names"] = names;
    std::ofstream out(o.out);
    if (!out) throw gdd::ParseError("cannot open '" + o.out + "' for writing");
    out << "# " << j.dump() << '\n';
    out << "k";
    for (const std::string& name : names) out << ',' << name;
    out << '\n';
    for (size_t k = 0; k < kmax; ++k) {
        out << (k + 1);
        for (const auto& col : errors) out << ',' << fmt(col[k]);
        out << '\n';
    }
    if (!out) throw gdd::ParseError("failed writing '" + o.out + "'");
    note("recon-curve: " + std::to_string(kmax) + " truncation levels -> " + o.out);
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineConfig {
    std::string mesh1, mesh2, out_dir, init_mode, init_file, init_file2, truth;
    int samples = 100, k = 50, seed_vertex = 0, block = 20;
    int max_iters = 100, eval_samples = 1000, eval_seed = 0, lbo_k = 50, threads = -1;
    double penalty = -1.0, tol = 1e-6;
    bool post_lbo = false;
    std::string solver = "fm";
};

int config_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw gdd::ValidationError("config: " + key + " must be an integer, got '" + value + "'");
    }
}

double config_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw gdd::ValidationError("config: " + key + " must be a number, got '" + value + "'");
    }
}

bool config_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw gdd::ValidationError("config: " + key + " must be a boolean, got '" + value + "'");
}

PipelineConfig parse_pipeline_config(const std::map<std::string, std::string>& kv) {
    PipelineConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "mesh1") cfg.mesh1 = value;
        else if (key == "mesh2") cfg.mesh2 = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "init") cfg.init_mode = value;
        else if (key == "init_file") cfg.init_file = value;
        else if (key == "init_file2") cfg.init_file2 = value;
        else if (key == "truth") cfg.truth = value;
        else if (key == "solver") cfg.solver = value;
        else if (key == "samples") cfg.samples = config_int(key, value);
        else if (key == "k") cfg.k = config_int(key, value);
        else if (key == "seed_vertex") cfg.seed_vertex = config_int(key, value);
        else if (key == "block") cfg.block = config_int(key, value);
        else if (key == "max_iters") cfg.max_iters = config_int(key, value);
        else if (key == "eval_samples") cfg.eval_samples = config_int(key, value);
        else if (key == "eval_seed") cfg.eval_seed = config_int(key, value);
        else if (key == "lbo_k") cfg.lbo_k = config_int(key, value);
        else if (key == "threads") cfg.threads = config_int(key, value);
        else if (key == "penalty") cfg.penalty = config_double(key, value);
        else if (key == "tol") cfg.tol = config_double(key, value);
        else if (key == "post_lbo") cfg.post_lbo = config_bool(key, value);
        else throw gdd::ValidationError("config: unknown key '" + key + "'");
    }
    if (cfg.mesh1.empty() || cfg.mesh2.empty())
        throw gdd::ValidationError("pipeline: mesh1 and mesh2 are required");
    if (cfg.out_dir.empty()) throw gdd::ValidationError("pipeline: out_dir is required");
    if (cfg.init_mode.empty())
        throw gdd::ValidationError("pipeline: init mode is required (landmarks | corr | descriptors)");
    if (cfg.init_file.empty())
        throw gdd::ValidationError("pipeline: init_file is required");
    if (cfg.init_mode == "descriptors" && cfg.init_file2.empty())
        throw gdd::ValidationError("pipeline: init descriptors needs init_file2");
    return cfg;
}

struct PipelineOpts {
    std::string config_path;
    std::map<std::string, std::string> overrides; // flag values, win over the file
};

void run_pipeline(const PipelineOpts& o) {
    std::map<std::string, std::string> kv;
    if (!o.config_path.empty()) kv = gdd::read_config(o.config_path);
    for (const auto& [key, value] : o.overrides) kv[key] = value;
    const PipelineConfig cfg = parse_pipeline_config(kv);
    apply_threads(cfg.threads);
    const gdd::GeodesicSolver solver = parse_solver(cfg.solver);

    const auto t_total = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, double>> stages;
    auto timed = [&stages](const std::string& name, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            stages.emplace_back(name, seconds_since(t0));
        } else {
            auto result = fn();
            stages.emplace_back(name, seconds_since(t0));
            return result;
        }
    };

    // Everything is computed before the first byte is written, so a failing
    // stage leaves no partial output directory behind.
    const gdd::TriangleMesh mesh1 = timed("load_mesh1", [&] { return gdd::load_mesh(cfg.mesh1); });
    const gdd::TriangleMesh mesh2 = timed("load_mesh2", [&] { return gdd::load_mesh(cfg.mesh2); });
    const int n1 = static_cast<int>(mesh1.vertices.rows());
    const int n2 = static_cast<int>(mesh2.vertices.rows());
    note("pipeline: mesh1 n=" + std::to_string(n1) + ", mesh2 n=" + std::to_string(n2));

    // Fail fast on the evaluation inputs before the heavy stages run.
    gdd::Correspondence truth;
    if (!cfg.truth.empty()) {
        truth = gdd::read_correspondence(cfg.truth);
        check_correspondence_sizes(truth, cfg.truth, n1, n2);
    }
    for (const std::string& path : {cfg.init_file, cfg.init_file2})
        if (!path.empty() && !fs::exists(path))
            throw gdd::ParseError("cannot open '" + path + "'");

    const gdd::GeodesicBasis basis1 =
        timed("basis1", [&] { return basis_stage(mesh1, cfg.samples, cfg.k, solver, cfg.seed_vertex); });
    note("pipeline: basis1 " + std::to_string(basis1.Q.cols()) + " columns");
    const gdd::GeodesicBasis basis2 =
        timed("basis2", [&] { return basis_stage(mesh2, cfg.samples, cfg.k, solver, cfg.seed_vertex); });
    note("pipeline: basis2 " + std::to_string(basis2.Q.cols()) + " columns");

    const gdd::GeodesicDistanceDescriptor g1 = timed("gdd1", [&] { return gdd::build_gdd(basis1); });
    const gdd::GeodesicDistanceDescriptor g2 = timed("gdd2", [&] { return gdd::build_gdd(basis2); });

    gdd::LboBasis phi1, phi2;
    if (cfg.post_lbo) {
        phi1 = timed("lbo1", [&] { return gdd::lbo_eigenbasis(gdd::build_laplacian(mesh1), cfg.lbo_k); });
        phi2 = timed("lbo2", [&] { return gdd::lbo_eigenbasis(gdd::build_laplacian(mesh2), cfg.lbo_k); });
    }

    // Write the upstream artifacts now: the correspondence header pins the
    // descriptor files by content hash, exactly as a hand-run `match` would.
    fs::create_directories(cfg.out_dir);
    const auto artifact = [&cfg](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };
    std::vector<std::string> artifacts;
    const auto record = [&artifacts](const std::string& name) { artifacts.push_back(name); };

    gdd::write_basis(artifact("basis1.csv"), basis1,
                     basis_provenance(mesh1, basis1, cfg.samples, solver, cfg.seed_vertex).dump());
    record("basis1.csv");
    gdd::write_basis(artifact("basis2.csv"), basis2,
                     basis_provenance(mesh2, basis2, cfg.samples, solver, cfg.seed_vertex).dump());
    record("basis2.csv");
    gdd::write_gdd(artifact("gdd1.csv"), g1,
                   gdd_provenance(gdd::file_hash_hex(artifact("basis1.csv"))).dump());
    record("gdd1.csv");
    gdd::write_gdd(artifact("gdd2.csv"), g2,
                   gdd_provenance(gdd::file_hash_hex(artifact("basis2.csv"))).dump());
    record("gdd2.csv");
    if (cfg.post_lbo) {
        gdd::write_lbo_basis(artifact("lbo1.csv"), phi1, lbo_provenance(mesh1, cfg.lbo_k).dump());
        record("lbo1.csv");
        gdd::write_lbo_basis(artifact("lbo2.csv"), phi2, lbo_provenance(mesh2, cfg.lbo_k).dump());
        record("lbo2.csv");
    }

    MatchParams params;
    params.init = {cfg.init_mode, cfg.init_file};
    if (cfg.init_mode == "descriptors") params.init.push_back(cfg.init_file2);
    if (cfg.post_lbo) params.post_lbo = {artifact("lbo1.csv"), artifact("lbo2.csv")};
    params.k = cfg.k;
    params.block = cfg.block;
    params.penalty = cfg.penalty;
    params.max_iters = cfg.max_iters;
    params.tol = cfg.tol;

    const MatchOutcome m = timed("match", [&] {
        return match_core(g1, g2, params, gdd::file_hash_hex(artifact("gdd1.csv")),
                          gdd::file_hash_hex(artifact("gdd2.csv")));
    });
    gdd::write_correspondence(artifact("corr.csv"), m.corr, m.provenance.dump());
    record("corr.csv");

    timed("eval", [&] {
        if (!cfg.truth.empty()) {
            const gdd::DistortionCurve curve =
                gdd::distortion_curve(m.corr, truth, mesh2, gdd::default_thresholds(), solver);
            json j = eval_provenance(mesh1, mesh2, solver);
            j["truth"] = gdd::file_hash_hex(cfg.truth);
            j["corr"] = gdd::file_hash_hex(artifact("corr.csv"));
            gdd::write_curve(artifact("curve.csv"), curve, j.dump());
            record("curve.csv");
        }
        const int samples = std::min(cfg.eval_samples, std::min(n1, n2));
        if (samples < cfg.eval_samples)
            note("pipeline: eval sample size clamped to " + std::to_string(samples) + " (mesh size)");
        std::vector<std::pair<std::string, gdd::Correspondence>> named;
        named.emplace_back("corr", m.corr);
        json pins = json::array();
        pins.push_back({std::string("corr"), gdd::file_hash_hex(artifact("corr.csv"))});
        if (!cfg.truth.empty()) {
            named.emplace_back(stem(cfg.truth), truth);
            pins.push_back({stem(cfg.truth), gdd::file_hash_hex(cfg.truth)});
        }
        const auto rows = gdd::objective_table(named, mesh1, mesh2, samples,
                                               static_cast<unsigned>(cfg.eval_seed), solver);
        json j = eval_provenance(mesh1, mesh2, solver);
        j["samples"] = samples;
        j["seed"] = cfg.eval_seed;
        j["corr"] = pins;
        gdd::write_objective(artifact("objective.csv"), rows, j.dump());
        record("objective.csv");
    });

    json manifest;
    manifest["kind"] = "manifest";
    manifest["config"] = kv;
    json inputs;
    inputs["mesh1"] = {{"path", cfg.mesh1}, {"hash", gdd::file_hash_hex(cfg.mesh1)}};
    inputs["mesh2"] = {{"path", cfg.mesh2}, {"hash", gdd::file_hash_hex(cfg.mesh2)}};
    inputs["init_file"] = {{"path", cfg.init_file}, {"hash", gdd::file_hash_hex(cfg.init_file)}};
    if (!cfg.init_file2.empty())
        inputs["init_file2"] = {{"path", cfg.init_file2}, {"hash", gdd::file_hash_hex(cfg.init_file2)}};
    if (!cfg.truth.empty())
        inputs["truth"] = {{"path", cfg.truth}, {"hash", gdd::file_hash_hex(cfg.truth)}};
    manifest["inputs"] = inputs;
    json stage_rows = json::array();
    for (const auto& [name, seconds] : stages) stage_rows.push_back({{"name", name}, {"seconds", seconds}});
    manifest["stages"] = stage_rows;
    manifest["total_seconds"] = seconds_since(t_total);
    manifest["artifacts"] = artifacts;
    std::ofstream mout(artifact("manifest.json"));
    if (!mout) throw gdd::ParseError("cannot open '" + artifact("manifest.json") + "' for writing");
    mout << manifest.dump(2) << '\n';
    if (!mout) throw gdd::ParseError("failed writing '" + artifact("manifest.json") + "'");

    note("pipeline: done -> " + cfg.out_dir + " (" + fmt(seconds_since(t_total)) + "s)");
}

void add_threads_flag(CLI::App* sub, int& target) {
    sub->add_option("--threads", target, "worker cap (0 = hardware); GDD_THREADS works too");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geodesic distance descriptor pipeline for non-rigid shape correspondence"};
    app.require_subcommand(1);
    const auto solver_values = CLI::IsMember({"fm", "fast_marching", "fast-marching", "dijkstra"});

    GeodesicsOpts geo;
    auto* geo_cmd = app.add_subcommand("geodesics", "geodesic distance fields, one CSV row per source");
    geo_cmd->add_option("mesh", geo.mesh, "input mesh (.off/.ply/.obj)")->required();
    geo_cmd->add_option("-o,--out", geo.out, "output CSV")->required();
    auto* geo_src = geo_cmd->add_option("--source", geo.sources, "source vertex (repeatable)");
    auto* geo_fps = geo_cmd->add_option("--fps", geo.fps, "sample this many sources by FPS instead");
    geo_src->excludes(geo_fps);
    geo_fps->excludes(geo_src);
    geo_cmd->add_option("--seed-vertex", geo.seed_vertex, "first FPS sample");
    geo_cmd->add_option("--solver", geo.solver, "fm | dijkstra")->check(solver_values);
    add_threads_flag(geo_cmd, geo.threads);
    geo_cmd->callback([&geo] { run_geodesics(geo); });

    BasisOpts bas;
    auto* bas_cmd = app.add_subcommand("basis", "low-rank geodesic distance basis from FPS samples");
    bas_cmd->add_option("mesh", bas.mesh, "input mesh")->required();
    bas_cmd->add_option("-o,--out", bas.out, "output basis CSV")->required();
    bas_cmd->add_option("--samples", bas.samples, "FPS sample count p");
    bas_cmd->add_option("--k", bas.k, "columns kept");
    bas_cmd->add_option("--seed-vertex", bas.seed_vertex, "first FPS sample");
    bas_cmd->add_option("--solver", bas.solver, "fm | dijkstra")->check(solver_values);
    add_threads_flag(bas_cmd, bas.threads);
    bas_cmd->callback([&bas] { run_basis(bas); });

    LboOpts lbo;
    auto* lbo_cmd = app.add_subcommand("lbo", "Laplace-Beltrami eigenbasis");
    lbo_cmd->add_option("mesh", lbo.mesh, "input mesh")->required();
    lbo_cmd->add_option("-o,--out", lbo.out, "output basis CSV")->required();
    lbo_cmd->add_option("--k", lbo.k, "eigenfunctions kept");
    add_threads_flag(lbo_cmd, lbo.threads);
    lbo_cmd->callback([&lbo] { run_lbo(lbo); });

    GddOpts gdd_opts;
    auto* gdd_cmd = app.add_subcommand("gdd", "per-vertex descriptor X = Q sqrt(|lambda|) from a basis");
    gdd_cmd->add_option("basis", gdd_opts.basis, "basis CSV from `basis`")->required();
    gdd_cmd->add_option("-o,--out", gdd_opts.out, "output descriptor CSV")->required();
    add_threads_flag(gdd_cmd, gdd_opts.threads);
    gdd_cmd->callback([&gdd_opts] { run_gdd(gdd_opts); });

    MatchOpts mat;
    auto* mat_cmd = app.add_subcommand("match", "signature-constrained ICP between two descriptors");
    mat_cmd->add_option("gdd1", mat.gdd1, "descriptor CSV for shape 1")->required();
    mat_cmd->add_option("gdd2", mat.gdd2, "descriptor CSV for shape 2")->required();
    mat_cmd->add_option("-o,--out", mat.out, "output correspondence CSV")->required();
    mat_cmd
        ->add_option("--init", mat.params.init,
                     "landmarks <file> | corr <file> | descriptors <file1> <file2>")
        ->required()
        ->expected(1, 3);
    mat_cmd->add_option("--k", mat.params.k, "descriptor columns used");
    mat_cmd->add_option("--block", mat.params.block, "leading block estimated from landmarks");
    mat_cmd->add_option("--penalty", mat.params.penalty, "landmark ridge penalty (<0 = default)");
    mat_cmd->add_option("--max-iters", mat.params.max_iters, "ICP iteration cap");
    mat_cmd->add_option("--tol", mat.params.tol, "relative residual improvement cutoff");
    mat_cmd->add_option("--post-lbo", mat.params.post_lbo, "two lbo CSVs for ICP post-processing")
        ->expected(2);
    add_threads_flag(mat_cmd, mat.threads);
    mat_cmd->callback([&mat] { run_match(mat); });

    EvalOpts ev;
    auto* ev_cmd = app.add_subcommand("eval", "distortion curve and sampled objective table");
    ev_cmd->add_option("mesh1", ev.mesh1, "source mesh")->required();
    ev_cmd->add_option("mesh2", ev.mesh2, "target mesh")->required();
    ev_cmd->add_option("--truth", ev.truth, "ground-truth correspondence CSV");
    ev_cmd->add_option("--corr", ev.corrs, "correspondence CSV to score (repeatable)");
    ev_cmd->add_option("--curve-out", ev.curve_out, "distortion curve CSV (needs --truth, one --corr)");
    ev_cmd->add_option("--objective", ev.objective_out, "objective table CSV");
    ev_cmd->add_option("--samples", ev.samples, "objective sample size");
    ev_cmd->add_option("--seed", ev.seed, "objective sampling seed");
    ev_cmd->add_option("--solver", ev.solver, "fm | dijkstra")->check(solver_values);
    add_threads_flag(ev_cmd, ev.threads);
    ev_cmd->callback([&ev] { run_eval(ev); });

    ReconOpts rec;
    auto* rec_cmd = app.add_subcommand("recon-curve", "reconstruction error vs truncation level");
    rec_cmd->add_option("mesh", rec.mesh, "input mesh (dense distances; n <= 4000)")->required();
    rec_cmd->add_option("-o,--out", rec.out, "output CSV (k + one error column per basis)")->required();
    rec_cmd->add_option("--basis", rec.bases, "basis or lbo CSV (repeatable)")->required();
    rec_cmd->add_option("--probes", rec.probes, "random probe entries");
    rec_cmd->add_option("--seed", rec.seed, "probe sampling seed");
    rec_cmd->add_option("--solver", rec.solver, "fm | dijkstra")->check(solver_values);
    add_threads_flag(rec_cmd, rec.threads);
    rec_cmd->callback([&rec] { run_recon_curve(rec); });

    PipelineOpts pipe;
    auto* pipe_cmd = app.add_subcommand("pipeline", "basis -> gdd -> match -> eval, with a manifest");
    pipe_cmd->add_option("--config", pipe.config_path, "flat key = value config file");
    // Every config key doubles as a flag; flags win over the file.
    std::vector<std::tuple<CLI::Option*, std::string, std::string*>> pipe_flags;
    const std::vector<std::pair<std::string, std::string>> flag_specs = {
        {"--mesh1", "mesh1"},       {"--mesh2", "mesh2"},           {"--out", "out_dir"},
        {"--samples", "samples"},   {"--k", "k"},                   {"--solver", "solver"},
        {"--seed-vertex", "seed_vertex"}, {"--block", "block"},     {"--penalty", "penalty"},
        {"--max-iters", "max_iters"}, {"--tol", "tol"},             {"--truth", "truth"},
        {"--eval-samples", "eval_samples"}, {"--eval-seed", "eval_seed"}, {"--lbo-k", "lbo_k"},
        {"--threads", "threads"},
    };
    std::vector<std::string> pipe_values(flag_specs.size());
    for (size_t i = 0; i < flag_specs.size(); ++i) {
        auto* opt = pipe_cmd->add_option(flag_specs[i].first, pipe_values[i],
                                         "override config key " + flag_specs[i].second);
        pipe_flags.emplace_back(opt, flag_specs[i].second, &pipe_values[i]);
    }
    std::vector<std::string> pipe_init;
    auto* pipe_init_opt =
        pipe_cmd->add_option("--init", pipe_init, "landmarks <file> | corr <file> | descriptors <f1> <f2>")
            ->expected(1, 3);
    bool pipe_post_lbo = false;
    auto* pipe_post_opt = pipe_cmd->add_flag("--post-lbo,!--no-post-lbo", pipe_post_lbo,
                                             "override config key post_lbo");
    pipe_cmd->callback([&] {
        for (const auto& [opt, key, value] : pipe_flags)
            if (opt->count() > 0) pipe.overrides[key] = *value;
        if (pipe_init_opt->count() > 0) {
            pipe.overrides["init"] = pipe_init[0];
            if (pipe_init.size() > 1) pipe.overrides["init_file"] = pipe_init[1];
            if (pipe_init.size() > 2) pipe.overrides["init_file2"] = pipe_init[2];
        }
        if (pipe_post_opt->count() > 0) pipe.overrides["post_lbo"] = pipe_post_lbo ? "1" : "0";
        run_pipeline(pipe);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gdd::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const gdd::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gdd::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
