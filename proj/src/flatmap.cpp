#include "flat4/flatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flat4/errors.hpp"
#include "flat4/fd.hpp"

namespace flat4 {

using std::numbers::pi;

AngleFunction AngleFunction::constant(double c) {
    AngleFunction a = linear(0, 0, c);
    a.constant_value = c;
    return a;
}

AngleFunction AngleFunction::linear(double a, double b, double c) {
    AngleFunction f;
    f.w1 = [a, c](double u) { return a * u + c; };
    f.w2 = [b](double v) { return b * v; };
    f.dw1 = [a](double) { return a; };
    f.dw2 = [b](double) { return b; };
    if (a == 0 && b == 0) f.constant_value = c;
    return f;
}

namespace {

std::function<double(double)> interp(double x0, double h, std::vector<double> y) {
    return [x0, h, y = std::move(y)](double x) {
        double t = (x - x0) / h;
        auto n = static_cast<long>(y.size());
        long i = static_cast<long>(std::floor(t + 1e-9));
        if (i <= 0) return y.front();
        if (i >= n - 1) return y.back();
        double f = std::max(0.0, t - double(i));
        return f < 1e-9 ? y[i] : y[i] + f * (y[i + 1] - y[i]);
    };
}

}  // namespace

AngleFunction AngleFunction::sampled(double u0, double hu, std::vector<double> w1, std::vector<double> dw1,
                                     double v0, double hv, std::vector<double> w2, std::vector<double> dw2) {
    AngleFunction f;
    f.w1 = interp(u0, hu, std::move(w1));
    f.dw1 = interp(u0, hu, std::move(dw1));
    f.w2 = interp(v0, hv, std::move(w2));
    f.dw2 = interp(v0, hv, std::move(dw2));
    return f;
}

Quaternion FlatMapGrid::Nu(int i, int j) const {
    if (factors) return factors->Lu[i] * factors->R[j];
    return fd::du([this](int a, int b) { return F(a, b); }, i, j, geom.hu);
}
Quaternion FlatMapGrid::Nv(int i, int j) const {
    if (factors) return factors->L[i] * factors->Rv[j];
    return fd::dv([this](int a, int b) { return F(a, b); }, i, j, geom.hv);
}
Quaternion FlatMapGrid::Nuu(int i, int j) const {
    if (factors) return factors->Luu[i] * factors->R[j];
    return fd::duu([this](int a, int b) { return F(a, b); }, i, j, geom.hu);
}
Quaternion FlatMapGrid::Nhu(int i, int j) const {
    if (factors) return factors->Lu[i] * factors->xi * factors->R[j];
    return fd::du([this](int a, int b) { return Fhat(a, b); }, i, j, geom.hu);
}
Quaternion FlatMapGrid::Nhv(int i, int j) const {
    if (factors) return factors->L[i] * factors->xi * factors->Rv[j];
    return fd::dv([this](int a, int b) { return Fhat(a, b); }, i, j, geom.hv);
}
Quaternion FlatMapGrid::Nhuu(int i, int j) const {
    if (factors) return factors->Luu[i] * factors->xi * factors->R[j];
    return fd::duu([this](int a, int b) { return Fhat(a, b); }, i, j, geom.hu);
}

FlatMapGrid product_grid(const GridGeom& g, ProductFactors pf, AngleFunction omega) {
    if (static_cast<int>(pf.L.size()) != g.nu || static_cast<int>(pf.R.size()) != g.nv)
        throw Error("GridMismatch", "factor sample counts do not match the grid");
    FlatMapGrid m;
    m.geom = g;
    m.F = Array2<Quaternion>(g.nu, g.nv);
    m.Fhat = Array2<Quaternion>(g.nu, g.nv);
    parallel_rows(g.nu, [&](int i) {
        Quaternion Lx = pf.L[i] * pf.xi;
        for (int j = 0; j < g.nv; ++j) {
            m.F(i, j) = pf.L[i] * pf.R[j];
            m.Fhat(i, j) = Lx * pf.R[j];
        }
    });
    m.omega = std::move(omega);
    m.factors = std::move(pf);
    return m;
}

namespace {

double max_abs_defect(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Unwrapped angle of pure unit vectors in the plane spanned by e1, e2.
std::vector<double> plane_angles(const std::vector<Quaternion>& w, const Quaternion& e1, const Quaternion& e2) {
    std::vector<double> out(w.size());
    double prev = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double a = std::atan2(dot(w[i], e2), dot(w[i], e1));
        if (i > 0) a += 2 * pi * std::round((prev - a) / (2 * pi));
        out[i] = prev = a;
    }
    return out;
}

}  // namespace

FlatMapGrid bianchi_spivak_product(const S3Curve& a1, const S3Curve& a2, const Quaternion& xi0) {
    if (!a1.has_derivatives() || !a2.has_derivatives())
        throw Error("PreconditionViolated", "product factors need analytic first and second derivatives");
    if (std::abs(xi0.w) > 1e-12 || std::abs(xi0.norm() - 1.0) > 1e-12)
        throw Error("PreconditionViolated", "xi0 must be a unit pure quaternion");
    if (dist(a1.samples.front(), Quaternion::one()) > 1e-9 || dist(a2.samples.front(), Quaternion::one()) > 1e-9)
        throw Error("PreconditionViolated", "both factors must start at 1");

    std::size_t n1 = a1.size(), n2 = a2.size();
    std::vector<Quaternion> w1(n1), w2(n2);
    std::vector<double> side1(n1), side2(n2), speed(n1 + n2);
    for (std::size_t i = 0; i < n1; ++i) {
        w1[i] = a1.samples[i].conj() * a1.d1[i];
        side1[i] = dot(w1[i], xi0);
        speed[i] = a1.d1[i].norm() - 1.0;
    }
    for (std::size_t j = 0; j < n2; ++j) {
        w2[j] = a2.d1[j] * a2.samples[j].conj();
        side2[j] = dot(w2[j], xi0);
        speed[n1 + j] = a2.d1[j].norm() - 1.0;
    }
    double s1 = max_abs_defect(side1), s2 = max_abs_defect(side2), sp = max_abs_defect(speed);
    if (s1 > 1e-6 || s2 > 1e-6 || sp > 1e-6)
        throw Error("PreconditionViolated", "product side conditions fail",
                    {{"left_side_residual", s1}, {"right_side_residual", s2}, {"speed_residual", sp}});

    Quaternion e1 = w1.front();
    e1 = e1 - dot(e1, xi0) * xi0;
    e1 = e1 / e1.norm();
    Quaternion e2 = e1 * xi0;
    std::vector<double> phi1 = plane_angles(w1, e1, e2), phi2 = plane_angles(w2, e1, e2);
    std::vector<double> dphi1(n1), dphi2(n2);
    for (std::size_t i = 0; i < n1; ++i) {
        Quaternion wp = a1.d1[i].conj() * a1.d1[i] + a1.samples[i].conj() * a1.d2[i];
        dphi1[i] = -dot(wp, w1[i] * xi0);
        phi1[i] = -phi1[i];
    }
    for (std::size_t j = 0; j < n2; ++j) {
        Quaternion wp = a2.d2[j] * a2.samples[j].conj() + a2.d1[j] * a2.d1[j].conj();
        dphi2[j] = dot(wp, w2[j] * xi0);
    }
    GridGeom g;
    g.u0 = a1.u0;
    g.hu = a1.h;
    g.nu = static_cast<int>(n1);
    g.v0 = a2.u0;
    g.hv = a2.h;
    g.nv = static_cast<int>(n2);
    ProductFactors pf{a1.samples, a1.d1, a1.d2, a2.samples, a2.d1, a2.d2, xi0};
    return product_grid(g, std::move(pf),
                        AngleFunction::sampled(g.u0, g.hu, phi1, dphi1, g.v0, g.hv, phi2, dphi2));
}

S3Curve conjugate_curve(const S3Curve& c) {
    S3Curve out = c;
    for (auto* v : {&out.samples, &out.d1, &out.d2})
        for (auto& q : *v) q = q.conj();
    return out;
}

FlatMapGrid kitagawa_product(const S3Curve& a1, const S3Curve& a2, const Quaternion& xi0) {
    return bianchi_spivak_product(a1, conjugate_curve(a2), xi0);
}

namespace {

std::size_t count_nodes(double x0, double x1, double h) {
    if (!(h > 0) || !(x1 >= x0)) throw Error("InvalidArgument", "invalid sampling range");
    return static_cast<std::size_t>(std::llround((x1 - x0) / h)) + 1;
}

}  // namespace

S3Curve helix_factor_left(double mu, double u0, double u1, double h) {
    S3Curve c;
    c.u0 = u0;
    c.h = h;
    std::size_t n = count_nodes(u0, u1, h);
    const Quaternion p{0, 1, mu, 0};  // i + mu j
    const Quaternion J = mu * Quaternion::j();
    for (std::size_t i = 0; i < n; ++i) {
        double u = c.u(i);
        Quaternion a = qexp(u * p) * qexp(-u * J);
        // a' = a w, w = cos(2 mu u) i - sin(2 mu u) k
        Quaternion w{0, std::cos(2 * mu * u), 0, -std::sin(2 * mu * u)};
        Quaternion wp{0, -2 * mu * std::sin(2 * mu * u), 0, -2 * mu * std::cos(2 * mu * u)};
        c.samples.push_back(a);
        c.d1.push_back(a * w);
        c.d2.push_back(a * (w * w + wp));
    }
    return c;
}

S3Curve helix_factor_right(double mu, double v0, double v1, double h) {
    S3Curve c;
    c.u0 = v0;
    c.h = h;
    std::size_t n = count_nodes(v0, v1, h);
    const Quaternion p{0, 1, mu, 0};
    const Quaternion J = mu * Quaternion::j();
    for (std::size_t i = 0; i < n; ++i) {
        double v = c.u(i);
        Quaternion a = qexp(-v * J) * qexp(v * p);
        // a' = w a, w = cos(2 mu v) i + sin(2 mu v) k
        Quaternion w{0, std::cos(2 * mu * v), 0, std::sin(2 * mu * v)};
        Quaternion wp{0, -2 * mu * std::sin(2 * mu * v), 0, 2 * mu * std::cos(2 * mu * v)};
        c.samples.push_back(a);
        c.d1.push_back(w * a);
        c.d2.push_back((wp + w * w) * a);
    }
    return c;
}

FlatMapGrid helix_product_map(double mu1, double mu2, const GridGeom& g) {
    if (g.u0 != 0 || g.v0 != 0) throw Error("InvalidArgument", "helix product grid must start at the origin");
    S3Curve a1 = helix_factor_left(mu1, g.u0, g.u(g.nu - 1), g.hu);
    S3Curve a2 = helix_factor_right(mu2, g.v0, g.v(g.nv - 1), g.hv);
    ProductFactors pf{a1.samples, a1.d1, a1.d2, a2.samples, a2.d1, a2.d2, Quaternion::j()};
    return product_grid(g, std::move(pf), AngleFunction::linear(2 * mu1, 2 * mu2));
}

FlatMapGrid hopf_flat_map(const CurvatureProfile& k, double U, int nu, int nv, const HopfOptions& opt) {
    if (nu < 5 || nv < 5) throw Error("InvalidGrid", "flat map grids need at least five nodes per direction");
    GridGeom g = GridGeom::spanning(opt.u0, opt.u0 + U, nu, opt.v0, opt.v0 + opt.V, nv);
    int sub = opt.substeps > 0 ? opt.substeps : std::max(1, static_cast<int>(std::ceil(g.hu / 1e-3 - 1e-9)));
    S3Curve a = asymptotic_lift(k, g.u0, g.u0 + U, g.hu, Quaternion::one(), 1, sub);
    a.samples.resize(nu);
    a.d1.resize(nu);
    a.d2.resize(nu);
    ProductFactors pf;
    pf.L = a.samples;
    pf.Lu = a.d1;
    pf.Luu = a.d2;
    pf.xi = -Quaternion::j();
    for (int j = 0; j < nv; ++j) {
        double v = g.v(j);
        Quaternion e{std::cos(v), std::sin(v), 0, 0};
        pf.R.push_back(e);
        pf.Rv.push_back(Quaternion::i() * e);
        pf.Rvv.push_back(-e);
    }
    AngleFunction om;
    om.w1 = [k](double u) { return std::atan2(1.0, k(u)); };
    om.dw1 = [k](double u) {
        double kv = k(u);
        return -k.d1(u) / (1 + kv * kv);
    };
    om.w2 = [](double) { return 0.0; };
    om.dw2 = [](double) { return 0.0; };
    if (k.constant()) om.constant_value = std::atan2(1.0, k.k0);
    FlatMapGrid m = product_grid(g, std::move(pf), std::move(om));
    m.lattice = std::make_pair(U, 2 * pi);
    return m;
}

double FlatMapResiduals::max() const {
    return std::max({metric, polar_orthogonal, second_form, tangent_polar, polar_tangent, polar_metric,
                     gauss_map_metric, omega_uv});
}

FlatMapResiduals verify_flat_map(const FlatMapGrid& m) {
    const GridGeom& g = m.geom;
    if (g.nu < 5 || g.nv < 5) throw Error("InvalidGrid", "verification needs at least five nodes per direction");
    std::vector<FlatMapResiduals> rows(g.nu);
    auto F = [&m](int a, int b) { return m.F(a, b); };
    auto H = [&m](int a, int b) { return m.Fhat(a, b); };
    auto W = [&m](int a, int b) { return m.w(a, b); };
    parallel_rows(g.nu, [&](int i) {
        if (i < 2 || i > g.nu - 3) return;
        FlatMapResiduals& r = rows[i];
        for (int j = 2; j <= g.nv - 3; ++j) {
            Quaternion Fu = fd::du(F, i, j, g.hu), Fv = fd::dv(F, i, j, g.hv);
            Quaternion Hu = fd::du(H, i, j, g.hu), Hv = fd::dv(H, i, j, g.hv);
            double w = m.w(i, j), c = std::cos(w), s = std::sin(w);
            double E = dot(Fu, Fu), Fm = dot(Fu, Fv), G = dot(Fv, Fv);
            double Eh = dot(Hu, Hu), Fh = dot(Hu, Hv), Gh = dot(Hv, Hv);
            r.metric = std::max({r.metric, std::abs(E - 1), std::abs(G - 1), std::abs(Fm - c)});
            r.polar_orthogonal = std::max(r.polar_orthogonal, std::abs(dot(m.F(i, j), m.Fhat(i, j))));
            r.second_form = std::max({r.second_form, std::abs(dot(Fu, Hu)), std::abs(dot(Fv, Hv)),
                                      std::abs(0.5 * (dot(Fu, Hv) + dot(Fv, Hu)) - s)});
            r.tangent_polar = std::max({r.tangent_polar, std::abs(dot(Fu, m.Fhat(i, j))), std::abs(dot(Fv, m.Fhat(i, j)))});
            r.polar_tangent = std::max({r.polar_tangent, std::abs(dot(m.F(i, j), Hu)), std::abs(dot(m.F(i, j), Hv))});
            r.polar_metric = std::max({r.polar_metric, std::abs(Eh - 1), std::abs(Gh - 1), std::abs(Fh + c)});
            r.gauss_map_metric =
                std::max({r.gauss_map_metric, std::abs(E + Eh - 2), std::abs(G + Gh - 2), std::abs(Fm + Fh)});
            r.omega_uv = std::max(r.omega_uv, std::abs(fd::duv(W, i, j, g.hu, g.hv)));
        }
    });
    FlatMapResiduals out;
    for (const auto& r : rows) {
        out.metric = std::max(out.metric, r.metric);
        out.polar_orthogonal = std::max(out.polar_orthogonal, r.polar_orthogonal);
        out.second_form = std::max(out.second_form, r.second_form);
        out.tangent_polar = std::max(out.tangent_polar, r.tangent_polar);
        out.polar_tangent = std::max(out.polar_tangent, r.polar_tangent);
        out.polar_metric = std::max(out.polar_metric, r.polar_metric);
        out.gauss_map_metric = std::max(out.gauss_map_metric, r.gauss_map_metric);
        out.omega_uv = std::max(out.omega_uv, r.omega_uv);
    }
    return out;
}

double gauss_equation_residual(const FlatMapGrid& m) {
    const GridGeom& g = m.geom;
    std::vector<double> rows(g.nu, 0.0);
    auto F = [&m](int a, int b) { return m.F(a, b); };
    auto H = [&m](int a, int b) { return m.Fhat(a, b); };
    parallel_rows(g.nu, [&](int i) {
        if (i < 2 || i > g.nu - 3) return;
        for (int j = 2; j <= g.nv - 3; ++j) {
            Quaternion Fu = fd::du(F, i, j, g.hu), Fv = fd::dv(F, i, j, g.hv);
            Quaternion Hu = fd::du(H, i, j, g.hu), Hv = fd::dv(H, i, j, g.hv);
            double detI = dot(Fu, Fu) * dot(Fv, Fv) - dot(Fu, Fv) * dot(Fu, Fv);
            if (detI <= 1e-6) continue;
            double off = 0.5 * (dot(Fu, Hv) + dot(Fv, Hu));
            double detII = dot(Fu, Hu) * dot(Fv, Hv) - off * off;
            rows[i] = std::max(rows[i], std::abs(1 + detII / detI));
        }
    });
    return *std::max_element(rows.begin(), rows.end());
}

FlatMapGrid polar_swap(const FlatMapGrid& m) {
    FlatMapGrid out;
    out.geom = m.geom;
    out.F = m.Fhat;
    out.Fhat = Array2<Quaternion>(m.geom.nu, m.geom.nv);
    for (int i = 0; i < m.geom.nu; ++i)
        for (int j = 0; j < m.geom.nv; ++j) out.Fhat(i, j) = -m.F(i, j);
    out.omega = m.omega;
    auto w1 = m.omega.w1;
    out.omega.w1 = [w1](double u) { return w1(u) + pi; };
    if (m.omega.constant_value) out.omega.constant_value = *m.omega.constant_value + pi;
    out.lattice = m.lattice;
    if (m.factors) {
        // L xi R and L xi xi R = -L R keep the product form with the same xi.
        ProductFactors pf = *m.factors;
        for (auto* v : {&pf.L, &pf.Lu, &pf.Luu})
            for (auto& q : *v) q = q * pf.xi;
        out.factors = std::move(pf);
    }
    return out;
}

}  // namespace flat4
