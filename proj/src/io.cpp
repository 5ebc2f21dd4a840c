#include "flat4/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "flat4/errors.hpp"

namespace flat4 {

namespace {

// Shortest decimal that reads back to the same double.
std::string num(double x) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("IOError", "cannot open " + path + " for writing");
    return os;
}

template <class RowFn>
void write_rows(const std::string& path, const std::string& header, const GridGeom& g, RowFn&& fn) {
    std::ofstream os = open_out(path);
    os << header << '\n';
    std::vector<double> vals;
    for (int i = 0; i < g.nu; ++i)
        for (int j = 0; j < g.nv; ++j) {
            vals.clear();
            vals.push_back(g.u(i));
            vals.push_back(g.v(j));
            fn(i, j, vals);
            for (std::size_t c = 0; c < vals.size(); ++c) os << (c ? "," : "") << num(vals[c]);
            os << '\n';
        }
    if (!os) throw Error("IOError", "write failed for " + path);
}

struct Table {
    std::string header;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("IOError", "cannot open " + path);
    Table t;
    std::getline(is, t.header);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
        t.rows.push_back(std::move(r));
    }
    return t;
}

// Recovers the grid geometry from the u, v columns of a row-major table.
GridGeom table_geom(const Table& t) {
    if (t.rows.size() < 4) throw Error("InvalidGrid", "CSV grid too small");
    int nv = 1;
    while (nv < static_cast<int>(t.rows.size()) && t.rows[nv][0] == t.rows[0][0]) ++nv;
    if (t.rows.size() % nv != 0) throw Error("InvalidGrid", "CSV rows do not form a rectangle");
    GridGeom g;
    g.nv = nv;
    g.nu = static_cast<int>(t.rows.size() / nv);
    g.u0 = t.rows[0][0];
    g.v0 = t.rows[0][1];
    g.hu = g.nu > 1 ? (t.rows[static_cast<std::size_t>(g.nu - 1) * nv][0] - g.u0) / (g.nu - 1) : 0;
    g.hv = nv > 1 ? (t.rows[nv - 1][1] - g.v0) / (nv - 1) : 0;
    return g;
}

void expect_columns(const Table& t, std::size_t n, const std::string& path) {
    for (const auto& r : t.rows)
        if (r.size() != n) throw Error("InvalidGrid", "unexpected column count in " + path);
}

}  // namespace

void write_csv(const FlatMapGrid& m, const std::string& path) {
    write_rows(path, "u,v,F1,F2,F3,F4,Fh1,Fh2,Fh3,Fh4,omega", m.geom, [&](int i, int j, std::vector<double>& v) {
        for (int c = 0; c < 4; ++c) v.push_back(m.F(i, j)[c]);
        for (int c = 0; c < 4; ++c) v.push_back(m.Fhat(i, j)[c]);
        v.push_back(m.w(i, j));
    });
}

void write_csv(const SolutionGrid& s, const std::string& path) {
    write_rows(path, "u,v,alpha,beta", s.geom, [&](int i, int j, std::vector<double>& v) {
        v.push_back(s.alpha(i, j));
        v.push_back(s.beta(i, j));
    });
}

void write_csv(const ImmersionGrid& im, const std::string& path) {
    write_rows(path, "u,v,x1,x2,x3,x4,A,B,margin,K", im.geom, [&](int i, int j, std::vector<double>& v) {
        for (int c = 0; c < 4; ++c) v.push_back(im.f(i, j)[c]);
        v.push_back(im.A(i, j));
        v.push_back(im.B(i, j));
        v.push_back(im.margin(i, j));
        v.push_back(im.K_est(i, j));
    });
}

void write_curve_csv(const S3Curve& c, const std::string& path) {
    std::ofstream os = open_out(path);
    os << "s,x1,x2,x3,x4\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        os << num(c.u(i));
        for (int k = 0; k < 4; ++k) os << ',' << num(c.samples[i][k]);
        os << '\n';
    }
}

std::string csv_header(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("IOError", "cannot open " + path);
    std::string h;
    std::getline(is, h);
    return h;
}

FlatMapGrid read_flatmap_csv(const std::string& path) {
    Table t = read_table(path);
    expect_columns(t, 11, path);
    FlatMapGrid m;
    m.geom = table_geom(t);
    const GridGeom& g = m.geom;
    m.F = Array2<Quaternion>(g.nu, g.nv);
    m.Fhat = Array2<Quaternion>(g.nu, g.nv);
    Array2<double> w(g.nu, g.nv);
    for (int i = 0; i < g.nu; ++i)
        for (int j = 0; j < g.nv; ++j) {
            const auto& r = t.rows[static_cast<std::size_t>(i) * g.nv + j];
            m.F(i, j) = {r[2], r[3], r[4], r[5]};
            m.Fhat(i, j) = {r[6], r[7], r[8], r[9]};
            w(i, j) = r[10];
        }
    // omega1(u) = w(u, v0), omega2(v) = w(u0, v) - w(u0, v0)
    std::vector<double> w1(g.nu), w2(g.nv), d1(g.nu), d2(g.nv);
    for (int i = 0; i < g.nu; ++i) w1[i] = w(i, 0);
    for (int j = 0; j < g.nv; ++j) w2[j] = w(0, j) - w(0, 0);
    auto diff = [](const std::vector<double>& y, double h, std::vector<double>& d) {
        std::size_t n = y.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (n < 3) {
                d[i] = 0;
            } else if (i == 0) {
                d[i] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h);
            } else if (i + 1 == n) {
                d[i] = (3 * y[n - 1] - 4 * y[n - 2] + y[n - 3]) / (2 * h);
            } else if (i >= 2 && i + 2 < n) {
                d[i] = (y[i - 2] - 8 * y[i - 1] + 8 * y[i + 1] - y[i + 2]) / (12 * h);
            } else {
                d[i] = (y[i + 1] - y[i - 1]) / (2 * h);
            }
        }
    };
    diff(w1, g.hu, d1);
    diff(w2, g.hv, d2);
    m.omega = AngleFunction::sampled(g.u0, g.hu, w1, d1, g.v0, g.hv, w2, d2);
    return m;
}

SolutionGrid read_solution_csv(const std::string& path) {
    Table t = read_table(path);
    expect_columns(t, 4, path);
    SolutionGrid s;
    s.geom = table_geom(t);
    s.allocate(false);
    for (int i = 0; i < s.geom.nu; ++i)
        for (int j = 0; j < s.geom.nv; ++j) {
            const auto& r = t.rows[static_cast<std::size_t>(i) * s.geom.nv + j];
            s.alpha(i, j) = r[2];
            s.beta(i, j) = r[3];
        }
    return s;
}

Eigen::Vector3d stereographic(const Quaternion& p, const Quaternion& pole) {
    Quaternion n = pole / pole.norm();
    // Orthonormal basis of the complement of the pole, by Gram-Schmidt over e1..e4.
    Quaternion basis[3];
    int found = 0;
    for (int c = 0; c < 4 && found < 3; ++c) {
        Quaternion e{};
        e[c] = 1;
        e = e - dot(e, n) * n;
        for (int b = 0; b < found; ++b) e = e - dot(e, basis[b]) * basis[b];
        if (e.norm() < 1e-8) continue;
        basis[found++] = e / e.norm();
    }
    double x4 = dot(p, n);
    if (1.0 - x4 < 1e-9) throw Error("PoleOnSurface", "point coincides with the projection pole");
    return Eigen::Vector3d(dot(p, basis[0]), dot(p, basis[1]), dot(p, basis[2])) / (1.0 - x4);
}

void export_obj(const ImmersionGrid& im, const Projection& proj, const std::string& path) {
    const NodeRange& r = im.valid;
    Quaternion center{};
    double radius = 1;
    if (proj.kind == Projection::stereographic) {
        SphereFit fit = sphere_fit(im);
        if (fit.rms >= 1e-4) throw Error("NotOnSphere", "surface is not on a 3-sphere", {{"sphere_fit_rms", fit.rms}});
        center = fit.center;
        radius = fit.radius;
    } else if (proj.drop < 0 || proj.drop > 3) {
        throw Error("InvalidArgument", "drop coordinate index must be 0..3");
    }
    std::vector<Eigen::Vector3d> verts;
    for (int i = r.ilo; i <= r.ihi; ++i)
        for (int j = r.jlo; j <= r.jhi; ++j) {
            const Quaternion& p = im.f(i, j);
            if (proj.kind == Projection::stereographic) {
                verts.push_back(stereographic((p - center) / radius, proj.pole));
            } else {
                Eigen::Vector3d v;
                for (int c = 0, k = 0; c < 4; ++c)
                    if (c != proj.drop) v[k++] = p[c];
                verts.push_back(v);
            }
        }
    std::ofstream os = open_out(path);
    for (const auto& v : verts) os << "v " << num(v.x()) << ' ' << num(v.y()) << ' ' << num(v.z()) << '\n';
    int nv = r.jhi - r.jlo + 1, nu = r.ihi - r.ilo + 1;
    auto id = [nv](int i, int j) { return i * nv + j + 1; };
    for (int i = 0; i + 1 < nu; ++i)
        for (int j = 0; j + 1 < nv; ++j) {
            os << "f " << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << '\n';
            os << "f " << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << '\n';
        }
    if (!os) throw Error("IOError", "write failed for " + path);
}

}  // namespace flat4
