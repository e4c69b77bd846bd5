#include "doctest.h"

#include "gdd/geodesics.hpp"
#include "gdd/io.hpp"
#include "gdd/mesh.hpp"
#include "testutil.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

// The binary under test; ctest passes its location through the environment.
std::string cli_path() {
    const char* path = std::getenv("GDD_CLI_PATH");
    REQUIRE_MESSAGE(path != nullptr, "GDD_CLI_PATH must point at the gdd binary");
    return path;
}

int run_cli(const std::string& args) {
    const int status = std::system((cli_path() + " " + args).c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), ("missing file: " + path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Scratch directory with a small test shape plus identity landmark/truth
// files, torn down with the case.
struct Workspace {
    fs::path dir;
    std::string mesh, landmarks, truth;
    int n = 0;

    explicit Workspace(int subdivisions) {
        static int counter = 0;
        dir = fs::temp_directory_path() / ("gdd_cli_" + std::to_string(counter++));
        fs::create_directories(dir);

        const gdd::TriangleMesh shape = gddtest::asymmetric_blob(subdivisions);
        n = static_cast<int>(shape.vertices.rows());
        mesh = (dir / "shape.off").string();
        gdd::write_mesh(mesh, shape);

        landmarks = (dir / "landmarks.csv").string();
        std::ofstream lm(landmarks);
        lm << "source,target\n";
        for (int v : gdd::farthest_point_sampling(shape, 5, 0).indices) lm << v << ',' << v << '\n';

        truth = (dir / "truth.csv").string();
        std::ofstream tr(truth);
        tr << "source,target\n";
        for (int v = 0; v < n; ++v) tr << v << ',' << v << '\n';
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    std::string out(const std::string& name) const { return (dir / name).string(); }

    std::string pipeline_args(const std::string& out_dir) const {
        return "pipeline --mesh1 " + mesh + " --mesh2 " + mesh + " --out " + out(out_dir) +
               " --samples 40 --k 20 --init landmarks " + landmarks + " --truth " + truth +
               " 2>/dev/null";
    }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("pipeline self-match with identity landmarks recovers the identity map") {
    Workspace ws(2);
    REQUIRE(run_cli(ws.pipeline_args("run")) == 0);

    const gdd::Correspondence corr = gdd::read_correspondence(ws.out("run/corr.csv"));
    REQUIRE(static_cast<int>(corr.map.size()) == ws.n);
    for (int v = 0; v < ws.n; ++v) CHECK(corr.map[v] == v);

    const gdd::DistortionCurve curve = gdd::read_curve(ws.out("run/curve.csv"));
    CHECK(curve.fractions.front() == 1.0);
    CHECK(fs::exists(ws.out("run/manifest.json")));
    CHECK(fs::exists(ws.out("run/objective.csv")));
}

TEST_CASE("same config twice produces byte-identical correspondence and curve files") {
    Workspace ws(2);
    REQUIRE(run_cli(ws.pipeline_args("a")) == 0);
    REQUIRE(run_cli(ws.pipeline_args("b")) == 0);
    CHECK(slurp(ws.out("a/corr.csv")) == slurp(ws.out("b/corr.csv")));
    CHECK(slurp(ws.out("a/curve.csv")) == slurp(ws.out("b/curve.csv")));
    CHECK(slurp(ws.out("a/objective.csv")) == slurp(ws.out("b/objective.csv")));
    CHECK(slurp(ws.out("a/basis1.csv")) == slurp(ws.out("b/basis1.csv")));
    CHECK(slurp(ws.out("a/gdd1.csv")) == slurp(ws.out("b/gdd1.csv")));
}

TEST_CASE("running the stages by hand reproduces the pipeline artifacts byte for byte") {
    Workspace ws(1);
    REQUIRE(run_cli("pipeline --mesh1 " + ws.mesh + " --mesh2 " + ws.mesh + " --out " +
                    ws.out("pipe") + " --samples 20 --k 10 --block 10 --init landmarks " +
                    ws.landmarks + " --truth " + ws.truth + " 2>/dev/null") == 0);

    REQUIRE(run_cli("basis " + ws.mesh + " -o " + ws.out("basis.csv") +
                    " --samples 20 --k 10 2>/dev/null") == 0);
    REQUIRE(run_cli("gdd " + ws.out("basis.csv") + " -o " + ws.out("gdd.csv") + " 2>/dev/null") == 0);
    REQUIRE(run_cli("match " + ws.out("gdd.csv") + " " + ws.out("gdd.csv") + " -o " +
                    ws.out("corr.csv") + " --init landmarks " + ws.landmarks +
                    " --k 10 --block 10 2>/dev/null") == 0);
    REQUIRE(run_cli("eval " + ws.mesh + " " + ws.mesh + " --truth " + ws.truth + " --corr " +
                    ws.out("corr.csv") + " --curve-out " + ws.out("curve.csv") + " 2>/dev/null") == 0);

    CHECK(slurp(ws.out("pipe/basis1.csv")) == slurp(ws.out("basis.csv")));
    CHECK(slurp(ws.out("pipe/gdd1.csv")) == slurp(ws.out("gdd.csv")));
    CHECK(slurp(ws.out("pipe/corr.csv")) == slurp(ws.out("corr.csv")));
    CHECK(slurp(ws.out("pipe/curve.csv")) == slurp(ws.out("curve.csv")));
}

TEST_CASE("config file drives the pipeline and flags override it") {
    Workspace ws(1);
    const std::string cfg = ws.out("run.cfg");
    {
        std::ofstream out(cfg);
        out << "mesh1 = " << ws.mesh << "\n"
            << "mesh2 = " << ws.mesh << "\n"
            << "out_dir = " << ws.out("from_config") << "\n"
            << "samples = 20\n"
            << "k = 8\n" // overridden below
            << "block = 8\n"
            << "init = landmarks\n"
            << "init_file = " << ws.landmarks << "\n";
    }
    REQUIRE(run_cli("pipeline --config " + cfg + " --k 10 2>/dev/null") == 0);
    const gdd::GeodesicBasis basis = gdd::read_basis(ws.out("from_config/basis1.csv"));
    CHECK(basis.Q.cols() == 10);

    // Unknown config keys are input errors.
    {
        std::ofstream out(cfg, std::ios::app);
        out << "shoesize = 43\n";
    }
    CHECK(run_cli("pipeline --config " + cfg + " 2>/dev/null") == 2);
}

TEST_CASE("missing mesh: exit 2, message names the path, no partial outputs") {
    Workspace ws(1);
    const std::string missing = ws.out("not_there.off");
    const std::string log = ws.out("stderr.log");
    const int code = run_cli("pipeline --mesh1 " + missing + " --mesh2 " + ws.mesh + " --out " +
                             ws.out("fail") + " --samples 20 --k 10 --init landmarks " +
                             ws.landmarks + " 2>" + log);
    CHECK(code == 2);
    CHECK(slurp(log).find(missing) != std::string::npos);
    CHECK_FALSE(fs::exists(ws.out("fail")));
}

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli("2>/dev/null") == 1);
    CHECK(run_cli("frobnicate 2>/dev/null") == 1);
    CHECK(run_cli("basis 2>/dev/null") == 1);                       // missing required args
    CHECK(run_cli("match a b -o c 2>/dev/null") == 1);              // missing --init
    CHECK(run_cli("basis x -o y --solver warp 2>/dev/null") == 1);  // bad enum value
    CHECK(run_cli("--help >/dev/null") == 0);
}

TEST_CASE("bad GDD_THREADS is an input error") {
    Workspace ws(1);
    const int status =
        std::system(("GDD_THREADS=many " + cli_path() + " lbo " + ws.mesh + " -o " +
                     ws.out("lbo.csv") + " --k 8 2>/dev/null")
                        .c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
}

} // TEST_SUITE
