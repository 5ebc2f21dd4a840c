#include "flat4/torusearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>

#include <Eigen/Dense>

#include "flat4/errors.hpp"

namespace flat4 {

using std::numbers::pi;

Eigen::Matrix3d frame_transport(const CurvatureProfile& k, double length, double h) {
    if (!(h > 0) || !(length >= 0)) throw Error("InvalidArgument", "frame transport needs h > 0");
    Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
    if (length == 0) return M;
    long steps = static_cast<long>(std::ceil(length / h - 1e-9));
    double dh = length / steps;
    auto rhs = [&k](double u, const Eigen::Matrix3d& X) {
        double kv = k(u), sg = 2.0 / std::sqrt(1.0 + kv * kv);
        Eigen::Matrix3d A;
        A << 0, -sg, 0, sg, 0, -sg * kv, 0, sg * kv, 0;
        return Eigen::Matrix3d(X * A);
    };
    for (long n = 0; n < steps; ++n) {
        double u = n * dh;
        Eigen::Matrix3d k1 = rhs(u, M);
        Eigen::Matrix3d k2 = rhs(u + dh / 2, M + dh / 2 * k1);
        Eigen::Matrix3d k3 = rhs(u + dh / 2, M + dh / 2 * k2);
        Eigen::Matrix3d k4 = rhs(u + dh, M + dh * k3);
        M += dh / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        Eigen::Vector3d c = M.col(0).normalized();
        Eigen::Vector3d t = (M.col(1) - M.col(1).dot(c) * c).normalized();
        M.col(0) = c;
        M.col(1) = t;
        M.col(2) = c.cross(t);
        if (!M.allFinite()) throw Error("IntegrationFailure", "frame integration produced NaN", {{"u", u}});
    }
    return M;
}

std::pair<double, S2Point> rotation_angle_axis(const Eigen::Matrix3d& R, const S2Point& ref) {
    double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
    S2Point v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    v *= 0.5;
    double s = v.norm();
    double theta = std::atan2(s, c);
    S2Point axis;
    if (s > 1e-7) {
        axis = v / s;
    } else if (c > 0) {
        return {0.0, ref.normalized()};
    } else {
        // near pi: R + I = 2 axis axis^T
        Eigen::Matrix3d B = 0.5 * (R + Eigen::Matrix3d::Identity());
        int best = 0;
        for (int col = 1; col < 3; ++col)
            if (B.col(col).norm() > B.col(best).norm()) best = col;
        axis = B.col(best).normalized();
        if (axis.dot(ref) < 0) axis = -axis;
        return {pi, axis};
    }
    if (axis.dot(ref) < 0) {
        axis = -axis;
        theta = -theta;
    }
    return {theta, axis};
}

std::optional<Rational> rational_approx(double x, long q_max, double window) {
    if (!std::isfinite(x)) return std::nullopt;
    long p0 = 1, q0 = 0;  // convergent k-1
    long p1 = static_cast<long>(std::floor(x)), q1 = 1;
    double r = x - std::floor(x);
    for (int it = 0; it < 64; ++it) {
        if (q1 > q_max) break;
        if (std::abs(x - double(p1) / double(q1)) < window) return Rational{p1, q1};
        if (r < 1e-15) break;
        r = 1.0 / r;
        long a = static_cast<long>(std::floor(r));
        r -= a;
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return std::nullopt;
}

long closure_order(Rational r) {
    long g = std::gcd(std::abs(r.p), std::abs(r.q));
    long p = g ? r.p / g : r.p, q = g ? r.q / g : r.q;
    return (p % 2 == 0) ? q : 2 * q;
}

HolonomyResult holonomy(const CurvatureProfile& k, const HolonomyOptions& opt) {
    HolonomyResult out;
    out.rotation = frame_transport(k, k.T, opt.h);
    auto [theta, axis] = rotation_angle_axis(out.rotation, S2Point(0, 0, 1));
    out.theta = theta;
    out.axis = axis;
    out.theta_over_pi = theta / pi;
    out.rational = rational_approx(out.theta_over_pi, opt.q_max, opt.window);
    return out;
}

double a_n(const CurvatureProfile& k, int n, const HolonomyOptions& opt) {
    if (n < 1) throw Error("InvalidArgument", "stretch factor must be positive");
    return holonomy(stretch_profile(k, n), opt).theta_over_pi;
}

double closure_residual(const CurvatureProfile& k, int periods, double h) {
    Eigen::Matrix3d M = frame_transport(k, periods * k.T, h);
    return (M - Eigen::Matrix3d::Identity()).norm();
}

ProfileFamily harmonic_family(double k0, double T) {
    return [k0, T](double eps) {
        CurvatureProfile k = CurvatureProfile::circle(k0, T);
        k.cos = {eps};
        return k;
    };
}

namespace {

template <class G>
double bisect(G&& g, double a, double b, double ga, double tol) {
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        double m = 0.5 * (a + b), gm = g(m);
        if (gm == 0) return m;
        if ((gm < 0) == (ga < 0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

double closing_period(double k0, double eps, int m, double h) {
    if (m < 2) throw Error("InvalidArgument", "closing family needs m >= 2");
    const S2Point ref = S2Point(k0, 0, 1).normalized();
    const double target = std::cos(2 * pi / m);
    auto g = [&](double P) {
        CurvatureProfile k = CurvatureProfile::circle(k0, P);
        k.cos = {eps};
        Eigen::Matrix3d R = frame_transport(k, P, h);
        if (m == 2) {
            // sin-like component: crosses zero transversally at a half turn
            S2Point v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
            return 0.5 * v.dot(ref);
        }
        return (R.trace() - 1.0) / 2.0 - target;
    };
    const double P0 = pi / m;
    const int N = 24;
    double best = std::numeric_limits<double>::infinity(), root = 0;
    double a = 0.5 * P0, ga = g(a);
    for (int i = 1; i <= N; ++i) {
        double b = P0 * (0.5 + double(i) / N), gb = g(b);
        if ((ga < 0) != (gb < 0)) {
            double r = bisect(g, a, b, ga, 1e-13);
            if (std::abs(r - P0) < best) {
                best = std::abs(r - P0);
                root = r;
            }
        }
        a = b;
        ga = gb;
    }
    if (!std::isfinite(best))
        throw Error("NoClosingPeriod", "no period closes the base curve", {{"k0", k0}, {"eps", eps}, {"m", m}});
    return root;
}

ProfileFamily closing_family(double k0, int m, double h) {
    return [k0, m, h](double eps) {
        CurvatureProfile k = CurvatureProfile::circle(k0, closing_period(k0, eps, m, h));
        k.cos = {eps};
        return k;
    };
}

std::pair<double, std::vector<std::pair<double, double>>> solve_family(const ProfileFamily& family, int n,
                                                                       double value, double lo, double hi,
                                                                       const SearchOptions& opt) {
    if (!(hi > lo)) throw Error("InvalidArgument", "empty search bracket");
    int N = std::max(2, opt.scan_points);
    auto eval = [&](double e) {
        try {
            return a_n(family(e), n, opt.hol);
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    std::vector<std::pair<double, double>> scan;
    for (int i = 0; i < N; ++i) {
        double e = lo + (hi - lo) * i / (N - 1);
        scan.emplace_back(e, eval(e));
    }
    for (const auto& [e, a] : scan)
        if (std::abs(a - value) < 1e-12) return {e, scan};
    for (int i = 0; i + 1 < N; ++i) {
        double a = scan[i].second - value, b = scan[i + 1].second - value;
        if (std::isnan(a) || std::isnan(b) || (a < 0) == (b < 0)) continue;
        // skip the jump where theta wraps from pi to -pi
        if (std::abs(a - b) > 1.0) continue;
        auto g = [&](double e) { return eval(e) - value; };
        double r = bisect(g, scan[i].first, scan[i + 1].first, a, opt.tol);
        if (std::abs(g(r)) < 1e-6) return {r, scan};
    }
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    auto arr = nlohmann::json::array();
    for (const auto& [e, a] : scan) {
        if (!std::isnan(a)) {
            mn = std::min(mn, a);
            mx = std::max(mx, a);
        }
        arr.push_back({e, std::isnan(a) ? nlohmann::json(nullptr) : nlohmann::json(a)});
    }
    throw Error("NoSignChange", "a_n does not cross the target on the bracket",
                {{"target", value}, {"a_n_min", mn}, {"a_n_max", mx}, {"bracket", {lo, hi}}, {"scan", arr}});
}

SearchOutcome search_rational(const ProfileFamily& family, int n, Rational target, double lo, double hi,
                              const SearchOptions& opt) {
    if (target.q <= 0) throw Error("InvalidArgument", "target denominator must be positive");
    auto [eps, scan] = solve_family(family, n, double(target.p) / double(target.q), lo, hi, opt);
    SearchOutcome out;
    out.profile = family(eps);
    out.n = n;
    out.parameter = eps;
    out.target = target;
    out.scan = std::move(scan);
    out.achieved = holonomy(stretch_profile(out.profile, n), opt.hol);
    out.closure_residual =
        closure_residual(stretch_profile(out.profile, n), static_cast<int>(closure_order(target)), opt.hol.h);
    out.validated = out.closure_residual < 1e-4;
    return out;
}

nlohmann::json to_json(const SearchOutcome& s) {
    nlohmann::json j{{"profile", to_json(s.profile)},
                     {"n", s.n},
                     {"theta_over_pi", s.achieved.theta_over_pi},
                     {"rational", {s.target.p, s.target.q}},
                     {"parameter", s.parameter},
                     {"closure_residual", s.closure_residual},
                     {"validated", s.validated}};
    return j;
}

namespace {

struct SurfaceChecks {
    double margin_min = 0, K_max = 0, sphere_rms = 0, eig_min = 0, f_max = 0;
    int K_nodes = 0, K_degenerate = 0;
    SphereFit fit;
};

SurfaceChecks surface_checks(const ImmersionGrid& im) {
    SurfaceChecks c;
    c.margin_min = std::numeric_limits<double>::infinity();
    const NodeRange& r = im.valid;
    for (int i = r.ilo; i <= r.ihi; ++i)
        for (int j = r.jlo; j <= r.jhi; ++j) {
            c.margin_min = std::min(c.margin_min, im.margin(i, j));
            c.f_max = std::max(c.f_max, im.f(i, j).norm());
        }
    c.fit = sphere_fit(im);
    c.sphere_rms = c.fit.rms;
    c.eig_min = min_metric_eigenvalue(im);
    if (c.margin_min > 0) {
        Flatness fl = flatness_check(im);
        c.K_max = fl.max_abs_K;
        c.K_nodes = fl.evaluated;
        c.K_degenerate = fl.degenerate;
    }
    return c;
}

double omega_range(const FlatMapGrid& m) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < m.geom.nu; ++i)
        for (int j = 0; j < m.geom.nv; j += std::max(1, m.geom.nv - 1)) {
            lo = std::min(lo, m.w(i, j));
            hi = std::max(hi, m.w(i, j));
        }
    return hi - lo;
}

}  // namespace

double margin_gap(const FlatMapGrid& m, const SolutionGrid& s, double lambda) {
    Coefficients c = coefficients(m, s);
    NodeRange r = valid_range(m, s);
    double gap = 0;
    for (int i = r.ilo; i <= r.ihi; ++i)
        for (int j = r.jlo; j <= r.jhi; ++j) {
            double A = 1 + lambda * c.A(i, j), B = lambda * c.B(i, j), w = m.w(i, j);
            double mg = (A * A - B * B) * std::sin(w) - 2 * A * B * std::cos(w);
            gap = std::max(gap, std::abs(mg - std::sin(w)));
        }
    return gap;
}

TorusBuild build_perturbed_torus(const SearchOutcome& outcome, const TorusOptions& opt) {
    const CurvatureProfile& k = outcome.profile;
    const int n = outcome.n;
    if (!k.periodic()) throw Error("InvalidArgument", "torus profiles must be periodic");
    const double P = k.T;
    const long Kp = static_cast<long>(std::ceil(P / opt.h_target - 1e-9));
    const double hu = P / Kp;
    const int sub = std::max(1, static_cast<int>(std::ceil(n * hu / 1e-3 - 1e-9)));
    ClosureOptions co{opt.closure_tol, opt.m_max};

    auto closure_of = [&](const CurvatureProfile& prof, double h, double T) {
        S3Curve lift = asymptotic_lift(prof, 0, opt.m_max * T, h, Quaternion::one(), 1, sub);
        ClosureReport rep;
        try {
            rep = detect_closure(lift, T, co);
        } catch (const Error& e) {
            throw Error("ClosureFailure", "lift does not close within m_max periods", e.detail());
        }
        if (!rep.closes)
            throw Error("ClosureFailure", "lift closes only up to a fiber phase",
                        {{"phase", rep.phase}, {"multiple", rep.multiple}});
        return rep.multiple;
    };
    TorusBuild out;
    out.m_base = closure_of(k, hu, P);
    out.m_stretched = closure_of(stretch_profile(k, n), n * hu, n * P);
    long L = std::lcm(static_cast<long>(out.m_base), static_cast<long>(out.m_stretched));
    if (L > opt.m_max)
        throw Error("ClosureFailure", "common period exceeds m_max", {{"lcm", L}, {"m_max", opt.m_max}});
    out.U = L * P;
    int nu = static_cast<int>(L * Kp + 1);
    out.base = hopf_flat_map(k, out.U, nu, opt.nv);
    SolutionGrid st = stretched_solution(k, n, opt.coeffs, out.base.geom).solution;
    out.lambda = opt.lambda ? *opt.lambda : auto_lambda(out.base, st, opt.delta);
    out.solution = lambda_rescale(st, out.lambda);
    out.surface = assemble(out.base, out.solution);
    const ImmersionGrid& im = out.surface;

    double cu = 0, cv = 0;
    for (int j = 0; j < opt.nv; ++j) cu = std::max(cu, dist(im.f(nu - 1, j), im.f(0, j)));
    for (int i = 0; i < nu; ++i) cv = std::max(cv, dist(im.f(i, opt.nv - 1), im.f(i, 0)));
    SurfaceChecks sc = surface_checks(im);
    if (!(sc.margin_min > 0))
        throw Error("SingularAfterRescale", "regularity margin vanishes on the torus",
                    {{"sing_margin_min", sc.margin_min}, {"lambda", out.lambda}});
    double wr = omega_range(out.base);
    Tangency tg = tangency_check(im, out.base);
    bool degenerate = k.constant();
    nlohmann::json asserts{{"double_periodicity", cu < 1e-4 && cv < 1e-4},
                           {"regular", sc.margin_min > 0},
                           {"flat", sc.K_max < 1e-3},
                           {"not_spherical", sc.sphere_rms > 1e-2},
                           {"omega_nonconstant", wr > 1e-6}};
    bool all = true;
    for (const auto& [key, v] : asserts.items()) all = all && v.get<bool>();
    out.report = {{"search", to_json(outcome)},
                  {"U", out.U},
                  {"V", 2 * pi},
                  {"grid", {nu, opt.nv}},
                  {"m_base", out.m_base},
                  {"m_stretched", out.m_stretched},
                  {"lambda", out.lambda},
                  {"lattice_closure_u", cu},
                  {"lattice_closure_v", cv},
                  {"sing_margin_min", sc.margin_min},
                  {"metrica_K_max", sc.K_max},
                  {"metrica_K_nodes", sc.K_nodes},
                  {"metrica_K_degenerate_nodes", sc.K_degenerate},
                  {"metrica_min_eigenvalue", sc.eig_min},
                  {"otrama_tangency_u", tg.r_u},
                  {"otrama_tangency_v", tg.r_v},
                  {"sphere_fit_rms", sc.sphere_rms},
                  {"sphere_fit_radius", sc.fit.radius},
                  {"omega_range", wr},
                  {"f_max", sc.f_max},
                  {"degenerate", degenerate},
                  {"assertions", asserts},
                  {"passed", all}};
    return out;
}

CylinderBuild build_perturbed_cylinder(const CurvatureProfile& k, int n, const CylinderOptions& opt) {
    CylinderBuild out;
    out.base = hopf_flat_map(k, opt.U, opt.nu, opt.nv);
    double c0 = min_sin_omega(out.base);
    double kmax = 0, kpmax = 0;
    for (int i = 0; i < opt.nu; ++i) {
        double u = out.base.geom.u(i);
        kmax = std::max(kmax, std::abs(k(u)));
        kpmax = std::max(kpmax, std::abs(k.d1(u)));
    }
    SolutionGrid st = stretched_solution(k, n, opt.coeffs, out.base.geom).solution;
    out.lambda = opt.lambda ? *opt.lambda : auto_lambda(out.base, st, opt.delta);
    out.solution = lambda_rescale(st, out.lambda);
    out.surface = assemble(out.base, out.solution);
    SurfaceChecks sc = surface_checks(out.surface);
    if (!(sc.margin_min > 0))
        throw Error("SingularAfterRescale", "regularity margin vanishes on the cylinder window",
                    {{"sing_margin_min", sc.margin_min}, {"lambda", out.lambda}});
    nlohmann::json asserts{{"regular", sc.margin_min > 0},
                           {"metric_bounded_below", sc.eig_min > 0},
                           {"bounded", std::isfinite(sc.f_max)},
                           {"not_spherical", sc.sphere_rms > 1e-2}};
    bool all = true;
    for (const auto& [key, v] : asserts.items()) all = all && v.get<bool>();
    out.report = {{"profile", to_json(k)},
                  {"n", n},
                  {"window_U", opt.U},
                  {"grid", {opt.nu, opt.nv}},
                  {"lambda", out.lambda},
                  {"min_sin_omega", c0},
                  {"k_max", kmax},
                  {"k_prime_max", kpmax},
                  {"sing_margin_min", sc.margin_min},
                  {"metrica_min_eigenvalue", sc.eig_min},
                  {"metrica_K_max", sc.K_max},
                  {"sphere_fit_rms", sc.sphere_rms},
                  {"f_max", sc.f_max},
                  {"assertions", asserts},
                  {"passed", all}};
    return out;
}

}  // namespace flat4
