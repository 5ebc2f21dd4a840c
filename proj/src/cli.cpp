#include "flat4/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>

#include <CLI11.hpp>

#include "flat4/errors.hpp"
#include "flat4/io.hpp"
#include "flat4/torusearch.hpp"

namespace flat4::cli {

using nlohmann::json;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

double num(const json& p, const std::string& key, double def) {
    if (!p.contains(key)) return def;
    const json& v = p.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return std::stod(v.get<std::string>());
    throw Error("InvalidConfig", "parameter " + key + " must be a number");
}

int inum(const json& p, const std::string& key, int def) {
    double v = num(p, key, def);
    if (v != std::floor(v)) throw Error("InvalidConfig", "parameter " + key + " must be an integer");
    return static_cast<int>(v);
}

std::string str(const json& p, const std::string& key, const std::string& def) {
    if (!p.contains(key)) return def;
    const json& v = p.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
}

Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return {std::stol(s), 1};
        return {std::stol(s.substr(0, slash)), std::stol(s.substr(slash + 1))};
    } catch (const std::exception&) {
        throw Error("InvalidConfig", "target must look like p/q, got " + s);
    }
}

// Profile from "profile" (object or JSON string), else from k0/eps/T.
CurvatureProfile profile_of(const json& p, double k0_default) {
    if (p.contains("profile")) {
        const json& v = p.at("profile");
        return profile_from_json(v.is_string() ? json::parse(v.get<std::string>()) : v);
    }
    CurvatureProfile k = CurvatureProfile::circle(num(p, "k0", k0_default), num(p, "T", pi));
    double eps = num(p, "eps", 0.0);
    if (eps != 0) k.cos = {eps};
    return k;
}

json residuals_json(const FlatMapResiduals& r) {
    return {{"flatmap_metric", r.metric},
            {"flatmap_polar_orthogonal", r.polar_orthogonal},
            {"flatmap_second_form", r.second_form},
            {"flatmap_tangent_polar", r.tangent_polar},
            {"flatmap_polar_tangent", r.polar_tangent},
            {"flatmap_polar_metric", r.polar_metric},
            {"cond1_gauss_map_metric", r.gauss_map_metric},
            {"flatmap_omega_uv", r.omega_uv},
            {"flatmap_max", r.max()}};
}

json surface_json(const ImmersionGrid& im, const FlatMapGrid& m) {
    json j;
    Tangency t = tangency_check(im, m);
    j["otrama_tangency_u"] = t.r_u;
    j["otrama_tangency_v"] = t.r_v;
    j["metrica_identity"] = metric_identity_residual(im);
    SystemResidual ab = system_residual(coefficient_solution(im), m.omega, DerivativeMode::finite_difference);
    j["abab_residual"] = ab.max();
    double mm = std::numeric_limits<double>::infinity();
    for (int i = im.valid.ilo; i <= im.valid.ihi; ++i)
        for (int jj = im.valid.jlo; jj <= im.valid.jhi; ++jj) mm = std::min(mm, im.margin(i, jj));
    j["sing_margin_min"] = mm;
    if (mm > 0) j["metrica_K_max"] = flatness_check(im).max_abs_K;
    SphereFit f = sphere_fit(im);
    j["sphere_fit_rms"] = f.rms;
    j["sphere_fit_radius"] = f.radius;
    return j;
}

std::string out_path(const JobConfig& job, const std::string& name) { return (fs::path(job.out_dir) / name).string(); }

int hopf_closure_multiple(const CurvatureProfile& k, double hu, int m_max) {
    int sub = std::max(1, static_cast<int>(std::ceil(hu / 1e-3 - 1e-9)));
    S3Curve lift = asymptotic_lift(k, 0, m_max * k.T, hu, Quaternion::one(), 1, sub);
    ClosureReport rep = detect_closure(lift, k.T, {1e-6, m_max});
    if (!rep.closes) throw Error("ClosureFailure", "Hopf lift closes only up to a fiber phase", {{"phase", rep.phase}});
    return rep.multiple;
}

json cmd_helix(const JobConfig& job) {
    const json& p = job.params;
    double r = num(p, "r", 2.0), h = num(p, "h", 1e-3);
    int tau = inum(p, "tau", 1);
    double length = num(p, "length", 2 * pi * r);
    S3Curve c = helix(r, tau, 0, length, h);
    auto fr = frenet_s3(c);
    double ks = 0, ts = 0, sp = 0, kd = 0, td = 0, kex = (r * r - 1) / r;
    for (const auto& f : fr) {
        ks += f.kappa;
        ts += f.tau * f.tau;
        sp = std::max(sp, std::abs(f.speed - 1));
        kd = std::max(kd, std::abs(f.kappa - kex));
        td = std::max(td, std::abs(f.tau * f.tau - 1));
    }
    if (job.write_files) write_curve_csv(c, out_path(job, "helix.csv"));
    return {{"r", r},
            {"kappa", ks / fr.size()},
            {"tau2", ts / fr.size()},
            {"kappa_exact", kex},
            {"heli_speed_defect", sp},
            {"heli_kappa_defect", kd},
            {"heli_tau2_defect", td}};
}

json cmd_clifford(const JobConfig& job) {
    const json& p = job.params;
    int nu = inum(p, "nu", 257), nv = inum(p, "nv", 257);
    FlatMapGrid m = hopf_flat_map(CurvatureProfile::circle(0.0), 2 * pi, nu, nv);
    SolutionGrid s = geometric_solution(m, {Quaternion{}, 1.0});
    ImmersionGrid im = assemble(m, s);
    json rep = residuals_json(verify_flat_map(m));
    rep.update(surface_json(im, m));
    rep["frame_residual"] = im.frame_residual;
    if (job.write_files) {
        write_csv(m, out_path(job, "flatmap.csv"));
        write_csv(im, out_path(job, "immersion.csv"));
        Projection pr;
        pr.pole = Quaternion(1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0), 0);
        export_obj(im, pr, out_path(job, "clifford.obj"));
    }
    return rep;
}

json cmd_hopf_torus(const JobConfig& job) {
    const json& p = job.params;
    CurvatureProfile k = profile_of(p, 0.0);
    double hu_target = num(p, "h", 0.01);
    int nv = inum(p, "nv", 129);
    long K = static_cast<long>(std::ceil(k.T / hu_target - 1e-9));
    int m = hopf_closure_multiple(k, k.T / K, inum(p, "m_max", 64));
    FlatMapGrid g = hopf_flat_map(k, m * k.T, static_cast<int>(m * K + 1), nv);
    json rep = residuals_json(verify_flat_map(g));
    rep["closure_multiple"] = m;
    rep["U"] = m * k.T;
    rep["gauss_equation"] = gauss_equation_residual(g);
    rep["profile"] = to_json(k);
    if (job.write_files) write_csv(g, out_path(job, "flatmap.csv"));
    return rep;
}

json cmd_flatmap_verify(const JobConfig& job) {
    const json& p = job.params;
    if (p.contains("in")) {
        FlatMapGrid g = read_flatmap_csv(str(p, "in", ""));
        json rep = residuals_json(verify_flat_map(g));
        rep["gauss_equation"] = gauss_equation_residual(g);
        return rep;
    }
    double r = num(p, "r", 2.0), mu = helix_mu(r);
    int n = inum(p, "nu", 201);
    GridGeom gg = GridGeom::spanning(0, 2, n, 0, 2, n);
    FlatMapGrid hp = helix_product_map(mu, mu, gg);
    FlatMapGrid hm = hopf_flat_map(profile_of(p, 0.5), num(p, "U", pi), n, n);
    json rep;
    rep["helix_product"] = residuals_json(verify_flat_map(hp));
    rep["hopf"] = residuals_json(verify_flat_map(hm));
    if (job.write_files) write_csv(hm, out_path(job, "flatmap.csv"));
    return rep;
}

json cmd_solve(const JobConfig& job) {
    const json& p = job.params;
    std::string fam = str(p, "family", "exponential");
    int n = inum(p, "nu", 101);
    SolutionGrid s;
    AngleFunction om;
    DerivativeMode mode = DerivativeMode::automatic;
    if (fam == "wave") {
        double c = num(p, "omega", 0.0);
        GridGeom g = GridGeom::spanning(0, 2, n, 0, 2, n);
        s = wave_solution(g, c, ScalarFunction::sine(1, 1), ScalarFunction::sine(1, 1, pi / 2));
        om = AngleFunction::constant(c);
    } else if (fam == "geometric" || fam == "stretched") {
        CurvatureProfile k = profile_of(p, 0.5);
        FlatMapGrid m = hopf_flat_map(k, num(p, "U", k.T), n, n);
        GeometricCoeffs co{Quaternion(num(p, "a1", 1), num(p, "a2", 0), num(p, "a3", 0), num(p, "a4", 0)),
                           num(p, "rho", 0)};
        s = fam == "geometric" ? geometric_solution(m, co) : stretched_solution(k, inum(p, "n", 2), co, m.geom).solution;
        om = m.omega;
        mode = DerivativeMode::finite_difference;
    } else if (fam == "inhe") {
        double mu = num(p, "mu", 0.75);
        GridGeom g = GridGeom::spanning(0, 2, n, 0, 2, n);
        s = inhe_solution(g, mu, ScalarFunction::sine(1, 1), ScalarFunction::sine(0.5, 2));
        om = AngleFunction::linear(2 * mu, 2 * mu);
    } else if (fam == "exponential") {
        double r = num(p, "r", 2.0), ss = num(p, "s", 1.0);
        GridGeom g = GridGeom::spanning(0, 1, n, 0, 1, n);
        s = exponential_solution(g, r, ss);
        om = AngleFunction::linear(2 * r, 2 * ss);
    } else if (fam == "transformZ") {
        GridGeom g = GridGeom::spanning(0, 2, n, 0, 2, n);
        om = AngleFunction::linear(1, 1);
        SolutionGrid x;
        x.geom = g;
        x.allocate(false);
        TransformOptions to;
        to.y0 = {num(p, "y1", 1.0), num(p, "y2", 0.0)};
        s = transform_Z(x, om, to);
    } else if (fam == "numeric") {
        GridGeom g = GridGeom::spanning(0, 2 * pi, n, 0, 1, n);
        om = AngleFunction::linear(1.0, 0.3, 0.5);  // periodic in u up to 2 pi
        NumericOptions no;
        no.periodic_u = true;
        s = solve_numeric(g, om, [](double u) { return std::sin(u); }, [](double u) { return std::cos(u); }, no);
    } else {
        throw Error("InvalidConfig", "unknown solution family " + fam);
    }
    SystemResidual r = system_residual(s, om, mode);
    if (job.write_files) write_csv(s, out_path(job, "solution.csv"));
    return {{"family", fam}, {"tag", tag_name(s.tag)}, {"sistema_r_alpha", r.r_alpha}, {"sistema_r_beta", r.r_beta}};
}

struct SearchSetup {
    ProfileFamily family;
    int n;
    Rational target;
    double lo, hi;
    json describe;
};

SearchSetup search_setup(const json& p) {
    SearchSetup s;
    s.n = inum(p, "n", 2);
    s.target = parse_rational(str(p, "target", "-1/2"));
    // With this orientation convention positive k0 gives negative a_n near the circle.
    double k0 = num(p, "k0", s.target.p > 0 ? -1.0 : 1.0);
    std::string fam = str(p, "family", "closing");
    s.lo = num(p, "lo", 0.0);
    s.hi = num(p, "hi", 1.2);
    if (fam == "closing") {
        int m = inum(p, "m", 2);
        s.family = closing_family(k0, m);
        s.describe = {{"family", fam}, {"k0", k0}, {"m", m}};
    } else if (fam == "fixed") {
        double T = num(p, "T", pi);
        s.family = harmonic_family(k0, T);
        s.describe = {{"family", fam}, {"k0", k0}, {"T", T}};
    } else {
        throw Error("InvalidConfig", "family must be closing or fixed");
    }
    s.describe["bracket"] = {s.lo, s.hi};
    return s;
}

json cmd_search(const JobConfig& job) {
    SearchSetup s = search_setup(job.params);
    SearchOutcome o = search_rational(s.family, s.n, s.target, s.lo, s.hi);
    json j = to_json(o);
    j["setup"] = s.describe;
    return j;
}

json cmd_build_torus(const JobConfig& job) {
    const json& p = job.params;
    SearchSetup s = search_setup(p);
    SearchOutcome o = search_rational(s.family, s.n, s.target, s.lo, s.hi);
    TorusOptions opt;
    if (p.contains("lambda")) opt.lambda = num(p, "lambda", 1.0);
    opt.h_target = num(p, "h", opt.h_target);
    opt.nv = inum(p, "nv", opt.nv);
    TorusBuild b = build_perturbed_torus(o, opt);
    json rep = b.report;
    rep["setup"] = s.describe;
    rep["abab_residual"] =
        system_residual(coefficient_solution(b.surface), b.base.omega, DerivativeMode::finite_difference).max();
    rep["metrica_identity"] = metric_identity_residual(b.surface);
    if (job.write_files) {
        write_csv(b.surface, out_path(job, "immersion.csv"));
        Projection pr;
        pr.kind = Projection::drop_coordinate;
        pr.drop = inum(p, "drop", 3);
        export_obj(b.surface, pr, out_path(job, "torus.obj"));
    }
    return rep;
}

json cmd_build_cylinder(const JobConfig& job) {
    const json& p = job.params;
    CurvatureProfile k;
    if (p.contains("profile")) {
        k = profile_of(p, 0.5);
    } else {
        k = CurvatureProfile::circle(num(p, "k0", 0.5));
        k.quasi = {{num(p, "a1", 0.2), 1.0}, {num(p, "a2", 0.15), std::sqrt(2.0)}};
    }
    CylinderOptions opt;
    if (p.contains("lambda")) opt.lambda = num(p, "lambda", 1.0);
    opt.U = num(p, "U", opt.U);
    opt.nu = inum(p, "nu", opt.nu);
    opt.nv = inum(p, "nv", opt.nv);
    CylinderBuild b = build_perturbed_cylinder(k, inum(p, "n", 2), opt);
    if (job.write_files) {
        write_csv(b.surface, out_path(job, "immersion.csv"));
        Projection pr;
        pr.kind = Projection::drop_coordinate;
        export_obj(b.surface, pr, out_path(job, "cylinder.obj"));
    }
    return b.report;
}

json cmd_holonomy(const JobConfig& job) {
    const json& p = job.params;
    CurvatureProfile k = profile_of(p, 0.0);
    int n = inum(p, "n", 1);
    HolonomyOptions ho;
    ho.h = num(p, "h", 1e-3);
    HolonomyResult h = holonomy(stretch_profile(k, n), ho);
    json rot = json::array();
    for (int r = 0; r < 3; ++r) rot.push_back({h.rotation(r, 0), h.rotation(r, 1), h.rotation(r, 2)});
    json j{{"profile", to_json(k)}, {"n", n},          {"theta", h.theta}, {"theta_over_pi", h.theta_over_pi},
           {"axis", {h.axis.x(), h.axis.y(), h.axis.z()}}, {"rotation", rot}};
    j["rational"] = h.rational ? json{h.rational->p, h.rational->q} : json(nullptr);
    return j;
}

json cmd_verify(const JobConfig& job) {
    const json& p = job.params;
    std::string in = str(p, "in", "");
    if (in.empty()) throw Error("InvalidConfig", "verify needs --in");
    std::string h = csv_header(in);
    if (h.rfind("u,v,F1", 0) == 0) {
        FlatMapGrid g = read_flatmap_csv(in);
        json rep = residuals_json(verify_flat_map(g));
        rep["gauss_equation"] = gauss_equation_residual(g);
        rep["kind"] = "flatmap";
        return rep;
    }
    if (h == "u,v,alpha,beta") {
        SolutionGrid s = read_solution_csv(in);
        if (!p.contains("flatmap")) throw Error("InvalidConfig", "solution verification needs --flatmap for the angle");
        FlatMapGrid g = read_flatmap_csv(str(p, "flatmap", ""));
        SystemResidual r = system_residual(s, g.omega, DerivativeMode::finite_difference);
        return {{"kind", "solution"}, {"sistema_r_alpha", r.r_alpha}, {"sistema_r_beta", r.r_beta}};
    }
    throw Error("InvalidConfig", "unrecognized CSV header: " + h);
}

using Handler = json (*)(const JobConfig&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"helix", cmd_helix},           {"clifford", cmd_clifford},           {"hopf-torus", cmd_hopf_torus},
        {"flatmap-verify", cmd_flatmap_verify}, {"solve", cmd_solve},         {"build-torus", cmd_build_torus},
        {"build-cylinder", cmd_build_cylinder}, {"holonomy", cmd_holonomy},   {"search-rational", cmd_search},
        {"verify", cmd_verify}};
    return h;
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : handlers()) v.push_back(k);
        return v;
    }();
    return c;
}

void JobConfig::validate() const {
    if (!handlers().count(command)) throw Error("InvalidConfig", "unknown command " + command);
    for (const char* key : {"tol", "closure_tol", "h"})
        if (params.contains(key) && !(num(params, key, 1.0) > 0))
            throw Error("InvalidConfig", std::string("parameter ") + key + " must be positive");
    if (!write_files) return;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream probe(fs::path(out_dir) / ".write_probe");
    if (!probe) throw Error("InvalidConfig", "output directory is not writable: " + out_dir);
    probe.close();
    fs::remove(fs::path(out_dir) / ".write_probe", ec);
}

json run(const JobConfig& job) {
    job.validate();
    json rep = handlers().at(job.command)(job);
    rep["command"] = job.command;
    rep["ok"] = true;
    if (job.write_files) {
        std::ofstream os(fs::path(job.out_dir) / "report.json");
        os << rep.dump(2) << '\n';
    }
    return rep;
}

int main(int argc, char** argv) {
    CLI::App app{"Flat surfaces with flat normal bundle in R^4"};
    app.require_subcommand(1);
    static const std::vector<std::string> keys{"r",  "tau", "step", "length", "n",   "target", "lambda", "k0",
                                               "eps", "T",  "m",   "family", "nu",  "nv",     "U",      "tol",
                                               "in", "flatmap", "profile", "mu", "s", "lo", "hi", "omega", "drop"};
    std::map<std::string, std::string> values;
    std::string config, out = ".";
    bool no_files = false;
    for (const auto& name : commands()) {
        CLI::App* sub = app.add_subcommand(name, "run " + name);
        sub->add_option("--config", config, "JSON file with parameters");
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--no-files", no_files, "skip CSV/OBJ/report files");
        for (const auto& k : keys) sub->add_option("--" + k, values[k]);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        JobConfig job;
        job.command = app.get_subcommands().front()->get_name();
        if (!config.empty()) {
            std::ifstream is(config);
            if (!is) throw Error("InvalidConfig", "cannot read config " + config);
            job.params = json::parse(is);
            if (job.params.contains("out")) out = job.params.at("out").get<std::string>();
        }
        CLI::App* sub = app.get_subcommands().front();
        for (const auto& k : keys) {
            if (sub->count("--" + k) == 0) continue;
            const std::string& v = values[k];
            const std::string key = k == "step" ? "h" : k;
            char* end = nullptr;
            double d = std::strtod(v.c_str(), &end);
            if (!v.empty() && end && *end == '\0')
                job.params[key] = d;
            else
                job.params[key] = v;
        }
        job.out_dir = out;
        job.write_files = !no_files;
        std::cout << run(job).dump(2) << '\n';
        return 0;
    } catch (const Error& e) {
        std::cout << json{{"ok", false}, {"error", e.code()}, {"message", e.what()}, {"detail", e.detail()}}.dump(2)
                  << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cout << json{{"ok", false}, {"error", "InternalError"}, {"message", e.what()}}.dump(2) << '\n';
        return 3;
    }
}

}  // namespace flat4::cli
