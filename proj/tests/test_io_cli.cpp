#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "flat4/cli.hpp"
#include "flat4/errors.hpp"
#include "flat4/io.hpp"

using namespace flat4;
using nlohmann::json;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("flat4_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<Eigen::Vector3d> obj_vertices(const std::string& path) {
    std::ifstream is(path);
    std::vector<Eigen::Vector3d> v;
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("v ", 0) != 0) continue;
        std::istringstream ss(line.substr(2));
        Eigen::Vector3d p;
        ss >> p.x() >> p.y() >> p.z();
        v.push_back(p);
    }
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const std::string& env = "") {
    const char* exe = std::getenv("FLAT4_CLI");
    if (!exe) return -1;
    std::string cmd = env + " " + exe + " " + args + " > /dev/null";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

}  // namespace

TEST_CASE("stereographic examples") {
    Eigen::Vector3d p = stereographic(Quaternion(1, 0, 0, 0));
    CHECK((p - Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
    CHECK((stereographic(Quaternion(0, 0, 1, 0)) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
    try {
        stereographic(Quaternion(0, 0, 0, 1));
        FAIL("expected PoleOnSurface");
    } catch (const Error& e) {
        CHECK(e.code() == "PoleOnSurface");
    }
}

TEST_CASE("CSV round trip is exact") {
    fs::path d = scratch("csv");
    CurvatureProfile k = CurvatureProfile::circle(0.5);
    k.cos = {0.2};
    FlatMapGrid m = hopf_flat_map(k, pi, 33, 17);
    write_csv(m, (d / "m.csv").string());
    CHECK(csv_header((d / "m.csv").string()) == "u,v,F1,F2,F3,F4,Fh1,Fh2,Fh3,Fh4,omega");
    FlatMapGrid r = read_flatmap_csv((d / "m.csv").string());
    REQUIRE(r.geom.nu == 33);
    REQUIRE(r.geom.nv == 17);
    for (int i = 0; i < 33; ++i)
        for (int j = 0; j < 17; ++j) {
            for (int c = 0; c < 4; ++c) {
                CHECK(r.F(i, j)[c] == m.F(i, j)[c]);
                CHECK(r.Fhat(i, j)[c] == m.Fhat(i, j)[c]);
            }
            CHECK(r.w(i, j) == m.w(i, j));
        }
    SolutionGrid s = geometric_solution(m, {Quaternion(0.1, 0.2, 0.3, 0.4), 1.0 / 3.0});
    write_csv(s, (d / "s.csv").string());
    SolutionGrid t = read_solution_csv((d / "s.csv").string());
    for (int i = 0; i < 33; ++i)
        for (int j = 0; j < 17; ++j) {
            CHECK(t.alpha(i, j) == s.alpha(i, j));
            CHECK(t.beta(i, j) == s.beta(i, j));
        }
    ImmersionGrid im = assemble(m, s);
    write_csv(im, (d / "i.csv").string());
    CHECK(csv_header((d / "i.csv").string()) == "u,v,x1,x2,x3,x4,A,B,margin,K");
}

TEST_CASE("Clifford torus exports to a torus of revolution with radii ratio sqrt 2") {
    fs::path d = scratch("obj");
    FlatMapGrid m = hopf_flat_map(CurvatureProfile::circle(0.0), 2 * pi, 129, 129);
    ImmersionGrid im = assemble(m, geometric_solution(m, {Quaternion(), 1.0}));
    Projection pr;
    const double s = 1 / std::sqrt(2.0);
    pr.pole = Quaternion(s, 0, s, 0);
    export_obj(im, pr, (d / "c.obj").string());
    auto verts = obj_vertices((d / "c.obj").string());
    REQUIRE(verts.size() == std::size_t(129 * 129));
    // the great circle (c, s, c, -s)/sqrt2 through the pole projects to the axis of revolution
    auto on_axis = [&](double t) {
        return stereographic(Quaternion(std::cos(t), std::sin(t), std::cos(t), -std::sin(t)) * s, pr.pole);
    };
    Eigen::Vector3d p0 = on_axis(pi), dir = (on_axis(pi / 2) - on_axis(-pi / 2)).normalized();
    CHECK(((on_axis(2.0) - p0).cross(dir)).norm() < 1e-12);
    double lo = 1e300, hi = 0;
    for (const auto& v : verts) {
        double rho = ((v - p0).cross(dir)).norm();
        lo = std::min(lo, rho);
        hi = std::max(hi, rho);
    }
    double R = (hi + lo) / 2, r = (hi - lo) / 2;
    CHECK(std::abs(R / r - std::sqrt(2.0)) < 1e-3);
    std::string text = slurp(d / "c.obj");
    CHECK(text.find("\nf ") != std::string::npos);
}

TEST_CASE("stereographic export refuses non-spherical data") {
    fs::path d = scratch("obj2");
    GridGeom g = GridGeom::spanning(0, 1, 41, 0, 1, 41);
    FlatMapGrid m = helix_product_map(2, 1, g);
    ImmersionGrid im = assemble(m, exponential_solution(g, 2, 1));
    try {
        export_obj(im, Projection{}, (d / "x.obj").string());
        FAIL("expected NotOnSphere");
    } catch (const Error& e) {
        CHECK(e.code() == "NotOnSphere");
    }
    Projection drop;
    drop.kind = Projection::drop_coordinate;
    CHECK_NOTHROW(export_obj(im, drop, (d / "x.obj").string()));
}

TEST_CASE("cli run: helix report") {
    fs::path d = scratch("helix");
    cli::JobConfig job;
    job.command = "helix";
    job.params = {{"r", 2}};
    job.out_dir = d.string();
    json rep = cli::run(job);
    CHECK(rep.at("kappa").get<double>() == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(rep.at("tau2").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fs::exists(d / "helix.csv"));
    CHECK(json::parse(slurp(d / "report.json")) == rep);
}

TEST_CASE("cli run: verify a written grid") {
    fs::path d = scratch("verify");
    cli::JobConfig job;
    job.command = "clifford";
    job.params = {{"nu", 129}, {"nv", 129}};
    job.out_dir = d.string();
    cli::run(job);
    cli::JobConfig v;
    v.command = "verify";
    v.params = {{"in", (d / "flatmap.csv").string()}};
    v.write_files = false;
    json rep = cli::run(v);
    CHECK(rep.at("kind") == "flatmap");
    CHECK(rep.at("flatmap_max").get<double>() < 1e-5);
}

TEST_CASE("cli config validation") {
    cli::JobConfig job;
    job.command = "nope";
    CHECK_THROWS_AS(job.validate(), Error);
    job.command = "helix";
    job.params = {{"tol", -1}};
    job.write_files = false;
    CHECK_THROWS_AS(job.validate(), Error);
    job.params = {{"h", 0}};
    CHECK_THROWS_AS(job.validate(), Error);
    CHECK(cli::commands().size() == 10);
}

TEST_CASE("cli binary: errors and determinism") {
    if (!std::getenv("FLAT4_CLI")) {
        MESSAGE("FLAT4_CLI not set; skipping binary checks");
        return;
    }
    fs::path d = scratch("bin");
    CHECK(run_cli("helix --r 0.5 --out " + (d / "e").string()) == 2);
    CHECK(run_cli("solve --family exponential --r 1 --s 1 --no-files") == 2);
    CHECK(run_cli("build-cylinder --U 6 --nu 601 --nv 65 --out " + (d / "t1").string(), "THREADS=1") == 0);
    CHECK(run_cli("build-cylinder --U 6 --nu 601 --nv 65 --out " + (d / "t4").string(), "THREADS=4") == 0);
    CHECK(slurp(d / "t1" / "report.json") == slurp(d / "t4" / "report.json"));
    CHECK(slurp(d / "t1" / "immersion.csv") == slurp(d / "t4" / "immersion.csv"));
    json cfg = {{"r", 3}, {"out", (d / "cfg").string()}};
    std::ofstream(d / "cfg.json") << cfg.dump();
    CHECK(run_cli("helix --config " + (d / "cfg.json").string()) == 0);
    json rep = json::parse(slurp(d / "cfg" / "report.json"));
    CHECK(rep.at("kappa").get<double>() == doctest::Approx(8.0 / 3.0).epsilon(1e-8));
}
