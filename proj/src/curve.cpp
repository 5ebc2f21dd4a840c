#include "flat4/curve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "flat4/errors.hpp"
#include "flat4/fd.hpp"

namespace flat4 {

using std::numbers::pi;

double CurvatureProfile::eval(double u, int order) const {
    double out = order == 0 ? k0 : 0.0;
    double base = 2.0 * pi / T;
    // d^order/du^order of cos(wu) and sin(wu)
    auto term = [order](double a, double b, double w, double u) {
        double c = std::cos(w * u), s = std::sin(w * u);
        switch (order) {
            case 0: return a * c + b * s;
            case 1: return w * (-a * s + b * c);
            default: return -w * w * (a * c + b * s);
        }
    };
    std::size_t n = std::max(cos.size(), sin.size());
    for (std::size_t m = 0; m < n; ++m) {
        double a = m < cos.size() ? cos[m] : 0.0;
        double b = m < sin.size() ? sin[m] : 0.0;
        out += term(a, b, base * double(m + 1), u);
    }
    for (const auto& q : quasi) out += term(q.amp, 0.0, q.freq, u);
    return out;
}

bool CurvatureProfile::constant() const {
    auto zero = [](double x) { return x == 0.0; };
    bool qz = std::all_of(quasi.begin(), quasi.end(), [](const QuasiTerm& q) { return q.amp == 0.0; });
    return std::all_of(cos.begin(), cos.end(), zero) && std::all_of(sin.begin(), sin.end(), zero) && qz;
}

CurvatureProfile CurvatureProfile::circle(double k0, double T) {
    CurvatureProfile k;
    k.k0 = k0;
    k.T = T;
    return k;
}

CurvatureProfile stretch_profile(const CurvatureProfile& k, int n) {
    if (n < 1) throw Error("InvalidArgument", "stretch factor must be positive");
    CurvatureProfile s = k;
    s.T = k.T * n;
    for (auto& q : s.quasi) q.freq /= n;
    return s;
}

nlohmann::json to_json(const CurvatureProfile& k) {
    nlohmann::json j{{"T", k.T}, {"k0", k.k0}, {"cos", k.cos}, {"sin", k.sin}};
    if (!k.quasi.empty()) {
        auto q = nlohmann::json::array();
        for (const auto& t : k.quasi) q.push_back({t.amp, t.freq});
        j["quasi"] = q;
    }
    return j;
}

CurvatureProfile profile_from_json(const nlohmann::json& j) {
    CurvatureProfile k;
    k.T = j.value("T", pi);
    k.k0 = j.value("k0", 0.0);
    if (j.contains("cos")) k.cos = j.at("cos").get<std::vector<double>>();
    if (j.contains("sin")) k.sin = j.at("sin").get<std::vector<double>>();
    if (j.contains("quasi"))
        for (const auto& t : j.at("quasi")) k.quasi.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
    if (!(k.T > 0)) throw Error("InvalidProfile", "profile period T must be positive");
    return k;
}

double S3Curve::unit_defect() const {
    double m = 0;
    for (const auto& q : samples) m = std::max(m, std::abs(q.norm() - 1.0));
    return m;
}

S3Curve helix(double r, int tau_sign, double s0, double s1, double h) {
    if (!(r > 1)) throw Error("InvalidArgument", "helix needs r > 1");
    if (!(h > 0) || !(s1 > s0)) throw Error("InvalidArgument", "helix needs h > 0 and a nonempty range");
    if (tau_sign != 1 && tau_sign != -1) throw Error("InvalidArgument", "tau_sign must be +1 or -1");
    S3Curve c;
    c.u0 = s0;
    c.h = h;
    double nrm = 1.0 / std::sqrt(1.0 + r * r), sg = tau_sign;
    auto n = static_cast<std::size_t>(std::llround((s1 - s0) / h)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        double s = c.u(i), a = s / r, b = r * s;
        double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
        c.samples.push_back(nrm * Quaternion(r * ca, r * sa, cb, sg * sb));
        c.d1.push_back(nrm * Quaternion(-sa, ca, -r * sb, sg * r * cb));
        c.d2.push_back(nrm * Quaternion(-ca / r, -sa / r, -r * r * cb, -sg * r * r * sb));
    }
    return c;
}

S2Curve integrate_s2_curve(const std::function<double(double)>& k, double length, double h, const S2Point& c0,
                           const S2Point& t0) {
    if (!(h > 0) || !(length > 0)) throw Error("InvalidArgument", "integrate_s2_curve needs h > 0 and length > 0");
    int steps = static_cast<int>(std::ceil(length / h - 1e-9));
    double dh = length / steps;
    S2Curve out;
    out.h = dh;
    out.param = S2Param::s2_arclength;
    S2Point c = c0.normalized();
    S2Point t = (t0 - t0.dot(c) * c).normalized();
    auto rhs = [&](double s, const S2Point& cc, const S2Point& tt, S2Point& dc, S2Point& dt) {
        dc = tt;
        dt = -cc + k(s) * cc.cross(tt);
    };
    out.samples.push_back(c);
    out.tangents.push_back(t);
    for (int n = 0; n < steps; ++n) {
        double s = n * dh;
        S2Point k1c, k1t, k2c, k2t, k3c, k3t, k4c, k4t;
        rhs(s, c, t, k1c, k1t);
        rhs(s + dh / 2, c + dh / 2 * k1c, t + dh / 2 * k1t, k2c, k2t);
        rhs(s + dh / 2, c + dh / 2 * k2c, t + dh / 2 * k2t, k3c, k3t);
        rhs(s + dh, c + dh * k3c, t + dh * k3t, k4c, k4t);
        c += dh / 6 * (k1c + 2 * k2c + 2 * k3c + k4c);
        t += dh / 6 * (k1t + 2 * k2t + 2 * k3t + k4t);
        c.normalize();
        t = (t - t.dot(c) * c).normalized();
        out.samples.push_back(c);
        out.tangents.push_back(t);
    }
    return out;
}

Quaternion lift_velocity(const CurvatureProfile& k, double u, int sign) {
    double kv = k(u), q = 1.0 / std::sqrt(1.0 + kv * kv);
    return {0, sign * kv * q, 0, q};
}

Quaternion lift_velocity_d1(const CurvatureProfile& k, double u, int sign) {
    double kv = k(u), kp = k.d1(u), q3 = std::pow(1.0 + kv * kv, -1.5);
    return {0, sign * kp * q3, 0, -kv * kp * q3};
}

S3Curve asymptotic_lift(const CurvatureProfile& k, double u0, double u1, double h, const Quaternion& a0, int sign,
                        int substeps) {
    if (!(h > 0) || !(u1 >= u0)) throw Error("InvalidArgument", "asymptotic_lift needs h > 0 and u1 >= u0");
    if (sign != 1 && sign != -1) throw Error("InvalidArgument", "sign must be +1 or -1");
    if (std::abs(a0.norm() - 1.0) > 1e-12) throw Error("NotUnit", "initial point of the lift must be unit");
    substeps = std::max(substeps, 1);
    auto n = static_cast<std::size_t>(std::llround((u1 - u0) / h)) + 1;
    S3Curve c;
    c.u0 = u0;
    c.h = h;
    c.samples.reserve(n);
    Quaternion a = a0;
    double dh = h / substeps;
    auto push = [&](double u) {
        Quaternion w = lift_velocity(k, u, sign);
        Quaternion wp = lift_velocity_d1(k, u, sign);
        c.samples.push_back(a);
        c.d1.push_back(a * w);
        c.d2.push_back(a * (wp - Quaternion::one()));
    };
    push(u0);
    for (std::size_t i = 1; i < n; ++i) {
        for (int s = 0; s < substeps; ++s) {
            double u = u0 + (i - 1) * h + s * dh;
            Quaternion w1 = lift_velocity(k, u, sign);
            Quaternion w2 = lift_velocity(k, u + dh / 2, sign);
            Quaternion w4 = lift_velocity(k, u + dh, sign);
            Quaternion k1 = a * w1;
            Quaternion k2 = (a + dh / 2 * k1) * w2;
            Quaternion k3 = (a + dh / 2 * k2) * w2;
            Quaternion k4 = (a + dh * k3) * w4;
            a = renormalize(a + dh / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
        push(c.u(i));
    }
    return c;
}

namespace {

Quaternion tangent_at(const S3Curve& c, std::size_t i) {
    if (c.has_derivatives()) return c.d1[i];
    if (i + 2 >= c.size()) throw Error("InvalidArgument", "curve too short for a tangent estimate");
    return (-3.0 * c.samples[i] + 4.0 * c.samples[i + 1] - c.samples[i + 2]) / (2.0 * c.h);
}

}  // namespace

ClosureReport detect_closure(const S3Curve& c, double T, const ClosureOptions& opt) {
    if (!(T > 0) || c.size() < 3) throw Error("InvalidArgument", "detect_closure needs T > 0 and a sampled curve");
    double steps = T / c.h;
    auto K = static_cast<std::size_t>(std::llround(steps));
    if (K == 0 || std::abs(steps - double(K)) > 1e-6 * std::max(1.0, steps))
        throw Error("GridMisaligned", "period is not a whole number of curve steps",
                    {{"T", T}, {"h", c.h}, {"steps", steps}});
    ClosureReport rep;
    const Quaternion a0 = c.samples.front(), t0 = tangent_at(c, 0);
    double best = 1e300;
    for (int m = 1; m <= opt.m_max; ++m) {
        std::size_t idx = K * static_cast<std::size_t>(m);
        if (idx + (c.has_derivatives() ? 0 : 2) >= c.size()) break;
        const Quaternion& am = c.samples[idx];
        double res = std::max(dist(am, a0), dist(tangent_at(c, idx), t0) * c.h);
        best = std::min(best, res);
        if (dist(am, a0) < opt.tol && dist(tangent_at(c, idx), t0) < 100 * opt.tol) {
            rep.closes = true;
            rep.multiple = m;
            rep.residual = dist(am, a0);
            return rep;
        }
        if (rep.phase_multiple == 0) {
            Quaternion q = a0.conj() * am;
            if (std::abs(q.y) < opt.tol && std::abs(q.z) < opt.tol) {
                rep.phase_multiple = m;
                rep.phase = std::atan2(q.x, q.w);
            }
        }
    }
    if (rep.phase_multiple > 0) {
        rep.closes = false;
        rep.multiple = rep.phase_multiple;
        rep.residual = best;
        return rep;
    }
    throw Error("NoClosure", "no closure within m_max periods", {{"best_residual", best}, {"m_max", opt.m_max}});
}

std::vector<FrenetSample> frenet_s3(const S3Curve& c) {
    std::vector<FrenetSample> out;
    const auto& s = c.samples;
    double h = c.h;
    for (std::size_t i = 3; i + 3 < s.size(); ++i) {
        Quaternion x1 = fd::d1(s[i - 2], s[i - 1], s[i + 1], s[i + 2], h);
        Quaternion x2 = fd::d2(s[i - 2], s[i - 1], s[i], s[i + 1], s[i + 2], h);
        Quaternion x3 = fd::d3(s[i - 3], s[i - 2], s[i - 1], s[i + 1], s[i + 2], s[i + 3], h);
        FrenetSample f;
        f.speed = x1.norm();
        f.kappa = (x2 + s[i]).norm();
        Eigen::Matrix4d m;
        for (int r = 0; r < 4; ++r) {
            m(r, 0) = s[i][r];
            m(r, 1) = x1[r];
            m(r, 2) = x2[r];
            m(r, 3) = x3[r];
        }
        f.tau = f.kappa > 0 ? m.determinant() / (f.kappa * f.kappa) : 0.0;
        out.push_back(f);
    }
    return out;
}

std::vector<double> geodesic_curvature_fd(const std::vector<S2Point>& c, double h) {
    std::vector<double> out;
    for (std::size_t i = 2; i + 2 < c.size(); ++i) {
        S2Point x1 = fd::d1(c[i - 2], c[i - 1], c[i + 1], c[i + 2], h);
        S2Point x2 = fd::d2(c[i - 2], c[i - 1], c[i], c[i + 1], c[i + 2], h);
        double sp = x1.norm();
        out.push_back(c[i].dot(x1.cross(x2)) / (sp * sp * sp));
    }
    return out;
}

}  // namespace flat4
