#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "flat4/quat.hpp"

namespace flat4 {

// k(u) = k0 + sum_n cos[n-1] cos(2 pi n u / T) + sin[n-1] sin(2 pi n u / T)
//        + sum quasi[m].amp cos(quasi[m].freq u)
// The quasi terms are not T-periodic; they exist for the non-closing cylinder profiles.
struct QuasiTerm {
    double amp = 0, freq = 0;
};

struct CurvatureProfile {
    double T = 3.14159265358979323846;
    double k0 = 0;
    std::vector<double> cos, sin;
    std::vector<QuasiTerm> quasi;

    double operator()(double u) const { return eval(u, 0); }
    double d1(double u) const { return eval(u, 1); }
    double d2(double u) const { return eval(u, 2); }
    double eval(double u, int order) const;
    bool periodic() const { return quasi.empty(); }
    bool constant() const;

    static CurvatureProfile circle(double k0, double T = 3.14159265358979323846);
};

// k~(u) = k(u/n) with period nT.
CurvatureProfile stretch_profile(const CurvatureProfile& k, int n);

nlohmann::json to_json(const CurvatureProfile& k);
CurvatureProfile profile_from_json(const nlohmann::json& j);

// A curve sampled at u0 + h i, with optional analytic first and second derivatives.
struct S3Curve {
    std::vector<Quaternion> samples, d1, d2;
    double u0 = 0, h = 0;

    std::size_t size() const { return samples.size(); }
    double u(std::size_t i) const { return u0 + h * static_cast<double>(i); }
    bool has_derivatives() const { return d1.size() == samples.size() && d2.size() == samples.size(); }
    // Largest deviation of |samples| from one.
    double unit_defect() const;
};

enum class S2Param { lift_arclength, s2_arclength };

struct S2Curve {
    std::vector<S2Point> samples, tangents;
    double h = 0;
    S2Param param = S2Param::s2_arclength;
};

struct ClosureReport {
    bool closes = false;
    int multiple = 0;
    double residual = 0;
    double phase = 0;       // fiber phase at the first phase-only closure
    int phase_multiple = 0; // 0 when no phase-only closure was seen
};

// sigma(s) = (r cos(s/r), r sin(s/r), cos(rs), sin(rs)) / sqrt(1+r^2); tau_sign -1 reflects x4.
S3Curve helix(double r, int tau_sign, double s0, double s1, double h);

// Unit-speed S2 curve with geodesic curvature k(s), frame (c0, t0) at s = 0.
S2Curve integrate_s2_curve(const std::function<double(double)>& k, double length, double h,
                           const S2Point& c0 = S2Point(1, 0, 0), const S2Point& t0 = S2Point(0, 1, 0));

// Integrates a' = a w(u), w = sign k/sqrt(1+k^2) i + 1/sqrt(1+k^2) k, by RK4.
// The output has step h; each step is split into `substeps` RK4 steps.
S3Curve asymptotic_lift(const CurvatureProfile& k, double u0, double u1, double h,
                        const Quaternion& a0 = Quaternion::one(), int sign = 1, int substeps = 1);

// Body velocity w(u) of the lift and its derivative.
Quaternion lift_velocity(const CurvatureProfile& k, double u, int sign = 1);
Quaternion lift_velocity_d1(const CurvatureProfile& k, double u, int sign = 1);

struct ClosureOptions {
    double tol = 1e-6;
    int m_max = 64;
};

// Smallest m with a(u0 + mT) = a(u0) and matching tangent. T must be a whole number of steps.
ClosureReport detect_closure(const S3Curve& c, double T, const ClosureOptions& opt = {});

// Finite-difference Frenet data of a unit-speed S3 curve at interior samples.
struct FrenetSample {
    double speed = 0, kappa = 0, tau = 0;
};
std::vector<FrenetSample> frenet_s3(const S3Curve& c);

// Geodesic curvature of an S2 curve by finite differences in its own arclength.
std::vector<double> geodesic_curvature_fd(const std::vector<S2Point>& c, double h);

}  // namespace flat4
