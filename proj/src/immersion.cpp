#include "flat4/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "flat4/errors.hpp"
#include "flat4/fd.hpp"

namespace flat4 {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_match(const FlatMapGrid& m, const SolutionGrid& s) {
    if (!m.geom.same_as(s.geom, 1e-9)) throw Error("GridMismatch", "flat map and solution grids differ");
}

}  // namespace

NodeRange valid_range(const FlatMapGrid& m, const SolutionGrid& s) {
    int k = (m.analytic() && s.has_derivatives()) ? 0 : 2;
    return {k, m.geom.nu - 1 - k, 0, m.geom.nv - 1};
}

Coefficients coefficients(const FlatMapGrid& m, const SolutionGrid& s) {
    require_match(m, s);
    const GridGeom& g = m.geom;
    NodeRange r = valid_range(m, s);
    Coefficients c{Array2<double>(g.nu, g.nv, kNaN), Array2<double>(g.nu, g.nv, kNaN),
                   Array2<double>(g.nu, g.nv, kNaN)};
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        double wu = m.w_u(i);
        for (int j = r.jlo; j <= r.jhi; ++j) {
            double A = s.alpha(i, j) + s.alpha_uu(i, j) + wu * s.beta_u(i, j);
            double B = s.beta(i, j) + s.beta_uu(i, j) - wu * s.alpha_u(i, j);
            double w = m.w(i, j);
            c.A(i, j) = A;
            c.B(i, j) = B;
            c.margin(i, j) = (A * A - B * B) * std::sin(w) - 2 * A * B * std::cos(w);
        }
    });
    return c;
}

namespace {

struct BrioschiField {
    Array2<double> K;
    int evaluated = 0, degenerate = 0, singular = 0;
    double min_det = std::numeric_limits<double>::infinity();
};

BrioschiField brioschi(const ImmersionGrid& im) {
    const GridGeom& g = im.geom;
    NodeRange r = im.valid.shrink(2);
    BrioschiField out{Array2<double>(g.nu, g.nv, kNaN)};
    std::vector<int> ev(g.nu, 0), dg(g.nu, 0), sg(g.nu, 0);
    std::vector<double> md(g.nu, std::numeric_limits<double>::infinity());
    auto E = [&im](int a, int b) { return im.E(a, b); };
    auto F = [&im](int a, int b) { return im.Fm(a, b); };
    auto G = [&im](int a, int b) { return im.G(a, b); };
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        for (int j = r.jlo; j <= r.jhi; ++j) {
            double e = im.E(i, j), f = im.Fm(i, j), gg = im.G(i, j);
            double det = e * gg - f * f;
            md[i] = std::min(md[i], det);
            if (det < 1e-10) {
                ++sg[i];
                continue;
            }
            if (det <= 1e-8) {
                ++dg[i];
                continue;
            }
            double Eu = fd::du(E, i, j, g.hu), Ev = fd::dv(E, i, j, g.hv), Evv = fd::dvv(E, i, j, g.hv);
            double Fu = fd::du(F, i, j, g.hu), Fv = fd::dv(F, i, j, g.hv), Fuv = fd::duv(F, i, j, g.hu, g.hv);
            double Gu = fd::du(G, i, j, g.hu), Gv = fd::dv(G, i, j, g.hv), Guu = fd::duu(G, i, j, g.hu);
            Eigen::Matrix3d m1, m2;
            m1 << -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev, Fv - 0.5 * Gu, e, f, 0.5 * Gv, f, gg;
            m2 << 0, 0.5 * Ev, 0.5 * Gu, 0.5 * Ev, e, f, 0.5 * Gu, f, gg;
            out.K(i, j) = (m1.determinant() - m2.determinant()) / (det * det);
            ++ev[i];
        }
    });
    for (int i = 0; i < g.nu; ++i) {
        out.evaluated += ev[i];
        out.degenerate += dg[i];
        out.singular += sg[i];
        out.min_det = std::min(out.min_det, md[i]);
    }
    return out;
}

}  // namespace

ImmersionGrid assemble(const FlatMapGrid& m, const SolutionGrid& s) {
    Coefficients c = coefficients(m, s);
    const GridGeom& g = m.geom;
    ImmersionGrid im;
    im.geom = g;
    im.valid = valid_range(m, s);
    Quaternion nan{kNaN, kNaN, kNaN, kNaN};
    im.f = Array2<Quaternion>(g.nu, g.nv, nan);
    for (auto* a : {&im.Ahat, &im.Bhat, &im.E, &im.Fm, &im.G}) *a = Array2<double>(g.nu, g.nv, kNaN);
    im.A = std::move(c.A);
    im.B = std::move(c.B);
    im.margin = std::move(c.margin);
    const NodeRange r = im.valid;
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        for (int j = r.jlo; j <= r.jhi; ++j) {
            im.f(i, j) = s.alpha(i, j) * m.F(i, j) + s.beta(i, j) * m.Fhat(i, j) + s.alpha_u(i, j) * m.Nu(i, j) +
                         s.beta_u(i, j) * m.Nhu(i, j);
            double w = m.w(i, j), cw = std::cos(w), sw = std::sin(w);
            double A = im.A(i, j), B = im.B(i, j);
            double Ah = cw * A + sw * B, Bh = sw * A - cw * B;
            im.Ahat(i, j) = Ah;
            im.Bhat(i, j) = Bh;
            im.E(i, j) = A * A + B * B;
            im.Fm(i, j) = (A * A - B * B) * cw + 2 * A * B * sw;
            im.G(i, j) = Ah * Ah + Bh * Bh;
        }
    });
    im.K_est = brioschi(im).K;
    im.frame_residual = verify_frame(m);
    return im;
}

double verify_frame(const FlatMapGrid& m) {
    const GridGeom& g = m.geom;
    std::vector<double> rows(g.nu, 0.0);
    auto F = [&m](int a, int b) { return m.F(a, b); };
    auto H = [&m](int a, int b) { return m.Fhat(a, b); };
    parallel_rows(g.nu, [&](int i) {
        if (i < 2 || i > g.nu - 3) return;
        for (int j = 0; j < g.nv; ++j) {
            Quaternion e[4] = {m.F(i, j), m.Fhat(i, j), fd::du(F, i, j, g.hu), fd::du(H, i, j, g.hu)};
            for (int a = 0; a < 4; ++a)
                for (int b = a; b < 4; ++b)
                    rows[i] = std::max(rows[i], std::abs(dot(e[a], e[b]) - (a == b ? 1.0 : 0.0)));
        }
    });
    return *std::max_element(rows.begin(), rows.end());
}

Tangency tangency_check(const ImmersionGrid& im, const FlatMapGrid& m) {
    const GridGeom& g = im.geom;
    NodeRange r = im.valid.shrink(2);
    std::vector<Tangency> rows(g.nu);
    auto f = [&im](int a, int b) { return im.f(a, b); };
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        for (int j = r.jlo; j <= r.jhi; ++j) {
            Quaternion fu = fd::du(f, i, j, g.hu), fv = fd::dv(f, i, j, g.hv);
            Quaternion Nu = m.Nu(i, j), Nhu = m.Nhu(i, j);
            Quaternion pu = im.A(i, j) * Nu + im.B(i, j) * Nhu;
            Quaternion pv = im.Ahat(i, j) * Nu + im.Bhat(i, j) * Nhu;
            Tangency& t = rows[i];
            t.r_u = std::max(t.r_u, dist(fu, pu));
            t.r_v = std::max(t.r_v, dist(fv, pv));
            t.normal = std::max({t.normal, std::abs(dot(fu, m.F(i, j))), std::abs(dot(fu, m.Fhat(i, j))),
                                 std::abs(dot(fv, m.F(i, j))), std::abs(dot(fv, m.Fhat(i, j)))});
        }
    });
    Tangency out;
    for (const auto& t : rows) {
        out.r_u = std::max(out.r_u, t.r_u);
        out.r_v = std::max(out.r_v, t.r_v);
        out.normal = std::max(out.normal, t.normal);
    }
    return out;
}

double metric_identity_residual(const ImmersionGrid& im) {
    const GridGeom& g = im.geom;
    NodeRange r = im.valid.shrink(2);
    std::vector<double> rows(g.nu, 0.0);
    auto f = [&im](int a, int b) { return im.f(a, b); };
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        for (int j = r.jlo; j <= r.jhi; ++j) {
            Quaternion fu = fd::du(f, i, j, g.hu), fv = fd::dv(f, i, j, g.hv);
            rows[i] = std::max({rows[i], std::abs(dot(fu, fu) - im.E(i, j)), std::abs(dot(fu, fv) - im.Fm(i, j)),
                                std::abs(dot(fv, fv) - im.G(i, j))});
        }
    });
    return *std::max_element(rows.begin(), rows.end());
}

SolutionGrid coefficient_solution(const ImmersionGrid& im) {
    const NodeRange& r = im.valid;
    SolutionGrid s;
    s.geom = im.geom;
    s.geom.u0 = im.geom.u(r.ilo);
    s.geom.v0 = im.geom.v(r.jlo);
    s.geom.nu = r.ihi - r.ilo + 1;
    s.geom.nv = r.jhi - r.jlo + 1;
    s.tag = SolutionTag::derived;
    s.allocate(false);
    for (int i = 0; i < s.geom.nu; ++i)
        for (int j = 0; j < s.geom.nv; ++j) {
            s.alpha(i, j) = im.A(i + r.ilo, j + r.jlo);
            s.beta(i, j) = im.B(i + r.ilo, j + r.jlo);
        }
    return s;
}

Flatness flatness_check(const ImmersionGrid& im) {
    BrioschiField b = brioschi(im);
    if (b.singular > 0)
        throw Error("DegenerateMetric", "metric determinant below 1e-10",
                    {{"singular_nodes", b.singular}, {"min_det", b.min_det}});
    Flatness out;
    out.evaluated = b.evaluated;
    out.degenerate = b.degenerate;
    for (double k : b.K.data())
        if (!std::isnan(k)) out.max_abs_K = std::max(out.max_abs_K, std::abs(k));
    return out;
}

SphereFit sphere_fit(const ImmersionGrid& im) {
    const GridGeom& g = im.geom;
    const NodeRange& r = im.valid;
    using Mat5 = Eigen::Matrix<double, 5, 5>;
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    std::vector<Mat5> AtA(g.nu, Mat5::Zero());
    std::vector<Vec5> Atb(g.nu, Vec5::Zero());
    int count = (r.ihi - r.ilo + 1) * (r.jhi - r.jlo + 1);
    if (count < 5) throw Error("InvalidGrid", "sphere fit needs at least five nodes");
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        for (int j = r.jlo; j <= r.jhi; ++j) {
            const Quaternion& p = im.f(i, j);
            Vec5 row;
            row << 2 * p.w, 2 * p.x, 2 * p.y, 2 * p.z, 1.0;
            AtA[i] += row * row.transpose();
            Atb[i] += row * p.norm2();
        }
    });
    Mat5 M = Mat5::Zero();
    Vec5 b = Vec5::Zero();
    for (int i = 0; i < g.nu; ++i) {
        M += AtA[i];
        b += Atb[i];
    }
    M += 1e-12 * Mat5::Identity();
    Vec5 x = M.ldlt().solve(b);
    SphereFit out;
    out.center = {x(0), x(1), x(2), x(3)};
    out.radius = std::sqrt(std::max(0.0, x(4) + out.center.norm2()));
    std::vector<double> ss(g.nu, 0.0);
    parallel_rows(g.nu, [&](int i) {
        if (i < r.ilo || i > r.ihi) return;
        for (int j = r.jlo; j <= r.jhi; ++j) {
            double d = dist(im.f(i, j), out.center) - out.radius;
            ss[i] += d * d;
        }
    });
    double tot = 0;
    for (double v : ss) tot += v;
    out.rms = std::sqrt(tot / count);
    return out;
}

double min_metric_eigenvalue(const ImmersionGrid& im) {
    double m = std::numeric_limits<double>::infinity();
    const NodeRange& r = im.valid;
    for (int i = r.ilo; i <= r.ihi; ++i)
        for (int j = r.jlo; j <= r.jhi; ++j) {
            double e = im.E(i, j), g = im.G(i, j), f = im.Fm(i, j);
            double tr = 0.5 * (e + g), d = std::sqrt(0.25 * (e - g) * (e - g) + f * f);
            m = std::min(m, tr - d);
        }
    return m;
}

bool singular_sets_agree(const ImmersionGrid& im, double tol) {
    const NodeRange& r = im.valid;
    auto near = [&](int i, int j, auto pred) {
        for (int a = std::max(r.ilo, i - 1); a <= std::min(r.ihi, i + 1); ++a)
            for (int b = std::max(r.jlo, j - 1); b <= std::min(r.jhi, j + 1); ++b)
                if (pred(a, b)) return true;
        return false;
    };
    auto by_margin = [&](int a, int b) { return std::abs(im.margin(a, b)) < tol; };
    auto by_metric = [&](int a, int b) {
        return im.E(a, b) * im.G(a, b) - im.Fm(a, b) * im.Fm(a, b) < tol * tol;
    };
    for (int i = r.ilo; i <= r.ihi; ++i)
        for (int j = r.jlo; j <= r.jhi; ++j) {
            if (by_margin(i, j) && !near(i, j, by_metric)) return false;
            if (by_metric(i, j) && !near(i, j, by_margin)) return false;
        }
    return true;
}

SolutionGrid lambda_rescale(const SolutionGrid& s, double lambda) {
    if (!(lambda >= 0)) throw Error("InvalidArgument", "lambda must be nonnegative");
    SolutionGrid out = s;
    out.tag = SolutionTag::rescaled;
    for (int i = 0; i < s.geom.nu; ++i)
        for (int j = 0; j < s.geom.nv; ++j) {
            out.alpha(i, j) = 1.0 + lambda * s.alpha(i, j);
            out.beta(i, j) = lambda * s.beta(i, j);
            if (!s.has_derivatives()) continue;
            for (auto* a : {&out.au, &out.av, &out.auu, &out.bu, &out.bv, &out.buu}) (*a)(i, j) *= lambda;
        }
    return out;
}

double min_sin_omega(const FlatMapGrid& m) {
    double v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.geom.nu; ++i)
        for (int j = 0; j < m.geom.nv; ++j) v = std::min(v, std::sin(m.w(i, j)));
    return v;
}

double auto_lambda(const FlatMapGrid& m, const SolutionGrid& s, double delta) {
    Coefficients c = coefficients(m, s);
    double c0 = min_sin_omega(m);
    if (!(c0 > 0)) throw Error("NoLambdaFound", "sin w is not bounded away from zero", {{"min_sin_omega", c0}});
    NodeRange r = valid_range(m, s);
    for (double lam = 1.0; lam >= 1e-12; lam *= 0.5) {
        double mn = std::numeric_limits<double>::infinity();
        for (int i = r.ilo; i <= r.ihi; ++i)
            for (int j = r.jlo; j <= r.jhi; ++j) {
                // the constant solution (1, 0) contributes A = 1, B = 0
                double A = 1 + lam * c.A(i, j), B = lam * c.B(i, j), w = m.w(i, j);
                mn = std::min(mn, (A * A - B * B) * std::sin(w) - 2 * A * B * std::cos(w));
            }
        if (mn > delta * c0) return lam;
    }
    throw Error("NoLambdaFound", "lambda underflowed 1e-12", {{"min_sin_omega", c0}});
}

}  // namespace flat4
