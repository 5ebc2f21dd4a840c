#include "flat4/hypsys.hpp"

#include <algorithm>
#include <cmath>

#include "flat4/errors.hpp"
#include "flat4/fd.hpp"

namespace flat4 {

std::string tag_name(SolutionTag t) {
    switch (t) {
        case SolutionTag::wave: return "wave";
        case SolutionTag::geometric: return "geometric";
        case SolutionTag::stretched: return "stretched";
        case SolutionTag::inhe: return "inhe";
        case SolutionTag::exponential: return "exponential";
        case SolutionTag::transformZ: return "transformZ";
        case SolutionTag::numeric: return "numeric";
        case SolutionTag::rescaled: return "rescaled";
        case SolutionTag::derived: return "derived";
    }
    return "unknown";
}

void SolutionGrid::allocate(bool with_derivatives) {
    alpha = Array2<double>(geom.nu, geom.nv);
    beta = Array2<double>(geom.nu, geom.nv);
    if (with_derivatives) {
        for (auto* a : {&au, &av, &auu, &bu, &bv, &buu}) *a = Array2<double>(geom.nu, geom.nv);
    } else {
        for (auto* a : {&au, &av, &auu, &bu, &bv, &buu}) *a = Array2<double>();
    }
}

double SolutionGrid::alpha_u(int i, int j) const {
    if (has_derivatives()) return au(i, j);
    return fd::du([this](int a, int b) { return alpha(a, b); }, i, j, geom.hu);
}
double SolutionGrid::alpha_v(int i, int j) const {
    if (has_derivatives()) return av(i, j);
    return fd::dv([this](int a, int b) { return alpha(a, b); }, i, j, geom.hv);
}
double SolutionGrid::alpha_uu(int i, int j) const {
    if (has_derivatives()) return auu(i, j);
    return fd::duu([this](int a, int b) { return alpha(a, b); }, i, j, geom.hu);
}
double SolutionGrid::beta_u(int i, int j) const {
    if (has_derivatives()) return bu(i, j);
    return fd::du([this](int a, int b) { return beta(a, b); }, i, j, geom.hu);
}
double SolutionGrid::beta_v(int i, int j) const {
    if (has_derivatives()) return bv(i, j);
    return fd::dv([this](int a, int b) { return beta(a, b); }, i, j, geom.hv);
}
double SolutionGrid::beta_uu(int i, int j) const {
    if (has_derivatives()) return buu(i, j);
    return fd::duu([this](int a, int b) { return beta(a, b); }, i, j, geom.hu);
}

ScalarFunction ScalarFunction::constant(double c) {
    auto z = [](double) { return 0.0; };
    return {[c](double) { return c; }, z, z, z};
}

ScalarFunction ScalarFunction::sine(double a, double w, double p) {
    return {[=](double t) { return a * std::sin(w * t + p); }, [=](double t) { return a * w * std::cos(w * t + p); },
            [=](double t) { return -a * w * w * std::sin(w * t + p); },
            [=](double t) { return -a * w * w * w * std::cos(w * t + p); }};
}

SystemResidual system_residual(const SolutionGrid& s, const AngleFunction& omega, DerivativeMode mode) {
    const GridGeom& g = s.geom;
    if (g.nu < 5 || g.nv < 5) throw Error("InvalidGrid", "residuals need at least five nodes per direction");
    bool analytic = mode == DerivativeMode::automatic && s.has_derivatives();
    auto A = [&s](int a, int b) { return s.alpha(a, b); };
    auto B = [&s](int a, int b) { return s.beta(a, b); };
    std::vector<SystemResidual> rows(g.nu);
    parallel_rows(g.nu, [&](int i) {
        if (!analytic && (i < 2 || i > g.nu - 3)) return;
        int jlo = analytic ? 0 : 2, jhi = analytic ? g.nv - 1 : g.nv - 3;
        double wu = omega.w1(g.u(i));
        for (int j = jlo; j <= jhi; ++j) {
            double w = wu + omega.w2(g.v(j)), c = std::cos(w), sn = std::sin(w);
            double au, av, bu, bv;
            if (analytic) {
                au = s.au(i, j), av = s.av(i, j), bu = s.bu(i, j), bv = s.bv(i, j);
            } else {
                au = fd::du(A, i, j, g.hu), av = fd::dv(A, i, j, g.hv);
                bu = fd::du(B, i, j, g.hu), bv = fd::dv(B, i, j, g.hv);
            }
            rows[i].r_alpha = std::max(rows[i].r_alpha, std::abs(av - c * au - sn * bu));
            rows[i].r_beta = std::max(rows[i].r_beta, std::abs(bv - sn * au + c * bu));
        }
    });
    SystemResidual out;
    for (const auto& r : rows) {
        out.r_alpha = std::max(out.r_alpha, r.r_alpha);
        out.r_beta = std::max(out.r_beta, r.r_beta);
    }
    return out;
}

SolutionGrid wave_solution(const GridGeom& g, double c, const ScalarFunction& f, const ScalarFunction& gm) {
    SolutionGrid s;
    s.geom = g;
    s.tag = SolutionTag::wave;
    s.allocate(true);
    double ch = std::cos(c / 2), sh = std::sin(c / 2);
    parallel_rows(g.nu, [&](int i) {
        for (int j = 0; j < g.nv; ++j) {
            double p = g.u(i) + g.v(j), m = g.u(i) - g.v(j);
            double F = f.f(p), F1 = f.d1(p), F2 = f.d2(p);
            double G = gm.f(m), G1 = gm.d1(m), G2 = gm.d2(m);
            s.alpha(i, j) = F * ch - G * sh;
            s.beta(i, j) = F * sh + G * ch;
            s.au(i, j) = F1 * ch - G1 * sh;
            s.av(i, j) = F1 * ch + G1 * sh;
            s.auu(i, j) = F2 * ch - G2 * sh;
            s.bu(i, j) = F1 * sh + G1 * ch;
            s.bv(i, j) = F1 * sh - G1 * ch;
            s.buu(i, j) = F2 * sh + G2 * ch;
        }
    });
    return s;
}

SolutionGrid wave_solution(const GridGeom& g, const AngleFunction& omega, const ScalarFunction& f,
                           const ScalarFunction& gm) {
    if (!omega.is_constant()) throw Error("NonConstantAngle", "wave solutions need a constant angle");
    return wave_solution(g, *omega.constant_value, f, gm);
}

SolutionGrid geometric_solution(const FlatMapGrid& m, const GeometricCoeffs& c) {
    SolutionGrid s;
    s.geom = m.geom;
    s.tag = SolutionTag::geometric;
    s.allocate(m.analytic());
    parallel_rows(m.geom.nu, [&](int i) {
        for (int j = 0; j < m.geom.nv; ++j) {
            s.alpha(i, j) = dot(c.a, m.F(i, j)) + c.rho;
            s.beta(i, j) = dot(c.a, m.Fhat(i, j));
            if (!m.analytic()) continue;
            s.au(i, j) = dot(c.a, m.Nu(i, j));
            s.av(i, j) = dot(c.a, m.Nv(i, j));
            s.auu(i, j) = dot(c.a, m.Nuu(i, j));
            s.bu(i, j) = dot(c.a, m.Nhu(i, j));
            s.bv(i, j) = dot(c.a, m.Nhv(i, j));
            s.buu(i, j) = dot(c.a, m.Nhuu(i, j));
        }
    });
    return s;
}

StretchedResult stretched_solution(const CurvatureProfile& k, int n, const GeometricCoeffs& c, const GridGeom& g) {
    if (n < 2) throw Error("InvalidArgument", "stretch factor must be at least 2");
    HopfOptions opt;
    opt.u0 = n * g.u0;
    opt.v0 = n * g.v0;
    opt.V = n * (g.v(g.nv - 1) - g.v0);
    double U = n * (g.u(g.nu - 1) - g.u0);
    // The inner RK4 step stays at the unstretched resolution.
    opt.substeps = std::max(1, static_cast<int>(std::ceil(n * g.hu / 1e-3 - 1e-9)));
    StretchedResult r{SolutionGrid{}, hopf_flat_map(stretch_profile(k, n), U, g.nu, g.nv, opt)};
    SolutionGrid t = geometric_solution(r.stretched_map, c);
    t.geom = g;
    t.tag = SolutionTag::stretched;
    if (t.has_derivatives()) {
        double n1 = n, n2 = double(n) * n;
        parallel_rows(g.nu, [&](int i) {
            for (int j = 0; j < g.nv; ++j) {
                t.au(i, j) *= n1;
                t.av(i, j) *= n1;
                t.bu(i, j) *= n1;
                t.bv(i, j) *= n1;
                t.auu(i, j) *= n2;
                t.buu(i, j) *= n2;
            }
        });
    }
    r.solution = std::move(t);
    return r;
}

SolutionGrid inhe_solution(const GridGeom& gr, double mu, const ScalarFunction& g, const ScalarFunction& h) {
    SolutionGrid s;
    s.geom = gr;
    s.tag = SolutionTag::inhe;
    s.allocate(true);
    parallel_rows(gr.nu, [&](int i) {
        for (int j = 0; j < gr.nv; ++j) {
            double t = gr.u(i) + gr.v(j), m = gr.u(i) - gr.v(j), th = mu * t;
            double C = std::cos(th), S = std::sin(th);
            double phi = 2 * g.d1(t), phi1 = 2 * g.d2(t), phi2 = 2 * g.d3(t);
            double psi = 2 * mu * g.f(t) + h.f(m);
            double psiu = 2 * mu * g.d1(t) + h.d1(m), psiv = 2 * mu * g.d1(t) - h.d1(m);
            double psiuu = 2 * mu * g.d2(t) + h.d2(m);
            s.alpha(i, j) = phi * C + psi * S;
            s.beta(i, j) = -psi * C + phi * S;
            s.au(i, j) = phi1 * C - mu * phi * S + psiu * S + mu * psi * C;
            s.av(i, j) = phi1 * C - mu * phi * S + psiv * S + mu * psi * C;
            s.auu(i, j) = phi2 * C - 2 * mu * phi1 * S - mu * mu * phi * C + psiuu * S + 2 * mu * psiu * C -
                          mu * mu * psi * S;
            s.bu(i, j) = -psiu * C + mu * psi * S + phi1 * S + mu * phi * C;
            s.bv(i, j) = -psiv * C + mu * psi * S + phi1 * S + mu * phi * C;
            s.buu(i, j) = -psiuu * C + 2 * mu * psiu * S + mu * mu * psi * C + phi2 * S + 2 * mu * phi1 * C -
                          mu * mu * phi * S;
        }
    });
    return s;
}

SolutionGrid exponential_solution(const GridGeom& g, double r, double s) {
    if (std::abs(r * r - s * s) < 1e-14) throw Error("EqualSpeeds", "exponential solutions need r^2 != s^2");
    SolutionGrid x;
    x.geom = g;
    x.tag = SolutionTag::exponential;
    x.allocate(true);
    parallel_rows(g.nu, [&](int i) {
        for (int j = 0; j < g.nv; ++j) {
            double u = g.u(i), v = g.v(j);
            double e = std::exp(s * u + r * v), th = r * u + s * v;
            double a = e * (std::cos(th) + std::sin(th)), b = e * (std::sin(th) - std::cos(th));
            x.alpha(i, j) = a;
            x.beta(i, j) = b;
            x.au(i, j) = s * a - r * b;
            x.bu(i, j) = s * b + r * a;
            x.av(i, j) = r * a - s * b;
            x.bv(i, j) = r * b + s * a;
            x.auu(i, j) = (s * s - r * r) * a - 2 * s * r * b;
            x.buu(i, j) = (s * s - r * r) * b + 2 * s * r * a;
        }
    });
    return x;
}

namespace {

using Vec2 = std::array<double, 2>;

// Cumulative integral with out[0] = 0.
std::vector<double> cumulative(const std::vector<double>& f, double h, Quadrature q) {
    std::size_t n = f.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    if (q == Quadrature::trapezoid || n < 3) {
        for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        return out;
    }
    out[1] = h * (5 * f[0] + 8 * f[1] - f[2]) / 12;
    for (std::size_t i = 2; i < n; ++i) out[i] = out[i - 2] + h * (f[i - 2] + 4 * f[i - 1] + f[i]) / 3;
    return out;
}

struct Field {
    Array2<double> a, b;
};

// Integrates the exact 1-form (P(X), Q(X)) du + dv from value y0 at the origin along two paths.
Field integrate_form(const GridGeom& g, const std::function<Vec2(int, int)>& du_rhs,
                     const std::function<Vec2(int, int)>& dv_rhs, Vec2 y0, Quadrature q, double tol) {
    Field A{Array2<double>(g.nu, g.nv), Array2<double>(g.nu, g.nv)};
    Field B = A;
    // Path A: along u at v0, then along v.
    {
        std::vector<double> pa(g.nu), pb(g.nu);
        for (int i = 0; i < g.nu; ++i) {
            Vec2 r = du_rhs(i, 0);
            pa[i] = r[0];
            pb[i] = r[1];
        }
        auto ca = cumulative(pa, g.hu, q), cb = cumulative(pb, g.hu, q);
        parallel_rows(g.nu, [&](int i) {
            std::vector<double> qa(g.nv), qb(g.nv);
            for (int j = 0; j < g.nv; ++j) {
                Vec2 r = dv_rhs(i, j);
                qa[j] = r[0];
                qb[j] = r[1];
            }
            auto sa = cumulative(qa, g.hv, q), sb = cumulative(qb, g.hv, q);
            for (int j = 0; j < g.nv; ++j) {
                A.a(i, j) = y0[0] + ca[i] + sa[j];
                A.b(i, j) = y0[1] + cb[i] + sb[j];
            }
        });
    }
    // Path B: along v at u0, then along u.
    {
        std::vector<double> pa(g.nv), pb(g.nv);
        for (int j = 0; j < g.nv; ++j) {
            Vec2 r = dv_rhs(0, j);
            pa[j] = r[0];
            pb[j] = r[1];
        }
        auto ca = cumulative(pa, g.hv, q), cb = cumulative(pb, g.hv, q);
        std::vector<std::vector<double>> colA(g.nv), colB(g.nv);
        parallel_rows(g.nv, [&](int j) {
            std::vector<double> qa(g.nu), qb(g.nu);
            for (int i = 0; i < g.nu; ++i) {
                Vec2 r = du_rhs(i, j);
                qa[i] = r[0];
                qb[i] = r[1];
            }
            colA[j] = cumulative(qa, g.hu, q);
            colB[j] = cumulative(qb, g.hu, q);
        });
        for (int i = 0; i < g.nu; ++i)
            for (int j = 0; j < g.nv; ++j) {
                B.a(i, j) = y0[0] + ca[j] + colA[j][i];
                B.b(i, j) = y0[1] + cb[j] + colB[j][i];
            }
    }
    double diff = 0;
    for (int i = 0; i < g.nu; ++i)
        for (int j = 0; j < g.nv; ++j)
            diff = std::max({diff, std::abs(A.a(i, j) - B.a(i, j)), std::abs(A.b(i, j) - B.b(i, j))});
    if (diff > tol)
        throw Error("PathDependence", "integration orders disagree", {{"max_difference", diff}, {"tolerance", tol}});
    return A;
}

}  // namespace

SolutionGrid transform_Z(const SolutionGrid& X, const AngleFunction& omega, const TransformOptions& opt) {
    const GridGeom& g = X.geom;
    std::vector<double> c1(g.nu), s1(g.nu), c2(g.nv), s2(g.nv);
    for (int i = 0; i < g.nu; ++i) {
        c1[i] = std::cos(omega.w1(g.u(i)));
        s1[i] = std::sin(omega.w1(g.u(i)));
    }
    for (int j = 0; j < g.nv; ++j) {
        c2[j] = std::cos(omega.w2(g.v(j)));
        s2[j] = std::sin(omega.w2(g.v(j)));
    }
    // L = [[c1, s1], [s1, -c1]], H = [[c2, s2], [-s2, c2]], H^-1 = H^T.
    auto L = [&](int i, double a, double b) { return Vec2{c1[i] * a + s1[i] * b, s1[i] * a - c1[i] * b}; };
    auto H = [&](int j, double a, double b) { return Vec2{c2[j] * a + s2[j] * b, -s2[j] * a + c2[j] * b}; };
    auto Hinv = [&](int j, double a, double b) { return Vec2{c2[j] * a - s2[j] * b, s2[j] * a + c2[j] * b}; };

    Field Y = integrate_form(
        g, [&](int i, int j) { return L(i, X.alpha(i, j), X.beta(i, j)); },
        [&](int i, int j) { return H(j, X.alpha(i, j), X.beta(i, j)); }, opt.y0, opt.quad, opt.path_tol);
    Field Z = integrate_form(
        g, [&](int i, int j) { return L(i, Y.a(i, j), Y.b(i, j)); },
        [&](int i, int j) { return Hinv(j, Y.a(i, j), Y.b(i, j)); }, {0.0, 0.0}, opt.quad, opt.path_tol);
    SolutionGrid out;
    out.geom = g;
    out.tag = SolutionTag::transformZ;
    out.alpha = std::move(Z.a);
    out.beta = std::move(Z.b);
    return out;
}

SolutionGrid solve_numeric(const GridGeom& g, const AngleFunction& omega, const std::function<double(double)>& alpha0,
                           const std::function<double(double)>& beta0, const NumericOptions& opt) {
    if (g.nu < 5 || g.nv < 2) throw Error("InvalidGrid", "numeric solver needs at least five u nodes");
    if (!(opt.cfl > 0 && opt.cfl <= 1)) throw Error("InvalidArgument", "CFL number must lie in (0, 1]");
    SolutionGrid s;
    s.geom = g;
    s.tag = SolutionTag::numeric;
    s.allocate(false);
    int n = g.nu;
    std::vector<double> a(n), b(n), na(n), nb(n);
    for (int i = 0; i < n; ++i) {
        a[i] = alpha0(g.u(i));
        b[i] = beta0(g.u(i));
        s.alpha(i, 0) = a[i];
        s.beta(i, 0) = b[i];
    }
    int sub = std::max(1, static_cast<int>(std::ceil(g.hv / (opt.cfl * g.hu) - 1e-12)));
    double dv = g.hv / sub;
    auto at = [&](const std::vector<double>& x, int i) {
        if (opt.periodic_u) {
            // the last node duplicates the first
            int m = n - 1;
            return x[((i % m) + m) % m];
        }
        return x[std::clamp(i, 0, n - 1)];
    };
    for (int j = 1; j < g.nv; ++j) {
        for (int st = 0; st < sub; ++st) {
            double v = g.v(j - 1) + st * dv;
            for (int i = 0; i < n; ++i) {
                double w = omega(g.u(i), v), ch = std::cos(w / 2), sh = std::sin(w / 2);
                // forward and backward differences
                double fa = (at(a, i + 1) - a[i]) / g.hu, fb = (at(b, i + 1) - b[i]) / g.hu;
                double ba = (a[i] - at(a, i - 1)) / g.hu, bb = (b[i] - at(b, i - 1)) / g.hu;
                // P+ (fwd) - P- (bwd), with P+ = e+ e+^T, P- = e- e-^T
                double pf = ch * fa + sh * fb, pb = -sh * ba + ch * bb;
                na[i] = a[i] + dv * (ch * pf + sh * pb);
                nb[i] = b[i] + dv * (sh * pf - ch * pb);
            }
            if (opt.periodic_u) {
                na[n - 1] = na[0];
                nb[n - 1] = nb[0];
            }
            std::swap(a, na);
            std::swap(b, nb);
        }
        for (int i = 0; i < n; ++i) {
            s.alpha(i, j) = a[i];
            s.beta(i, j) = b[i];
        }
    }
    return s;
}

SolutionGrid combine(double a, const SolutionGrid& x1, double b, const SolutionGrid& x2) {
    if (!x1.geom.same_as(x2.geom)) throw Error("GridMismatch", "solutions live on different grids");
    SolutionGrid s;
    s.geom = x1.geom;
    s.tag = x1.tag == x2.tag ? x1.tag : SolutionTag::derived;
    bool d = x1.has_derivatives() && x2.has_derivatives();
    s.allocate(d);
    for (int i = 0; i < s.geom.nu; ++i)
        for (int j = 0; j < s.geom.nv; ++j) {
            s.alpha(i, j) = a * x1.alpha(i, j) + b * x2.alpha(i, j);
            s.beta(i, j) = a * x1.beta(i, j) + b * x2.beta(i, j);
            if (!d) continue;
            s.au(i, j) = a * x1.au(i, j) + b * x2.au(i, j);
            s.av(i, j) = a * x1.av(i, j) + b * x2.av(i, j);
            s.auu(i, j) = a * x1.auu(i, j) + b * x2.auu(i, j);
            s.bu(i, j) = a * x1.bu(i, j) + b * x2.bu(i, j);
            s.bv(i, j) = a * x1.bv(i, j) + b * x2.bv(i, j);
            s.buu(i, j) = a * x1.buu(i, j) + b * x2.buu(i, j);
        }
    return s;
}

}  // namespace flat4
