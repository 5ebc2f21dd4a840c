#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "flat4/curve.hpp"
#include "flat4/immersion.hpp"

namespace flat4 {

struct Rational {
    long p = 0, q = 1;
};

struct HolonomyResult {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    double theta = 0;  // in (-pi, pi], sign fixed by axis . n(0) >= 0
    S2Point axis{0, 0, 1};
    double theta_over_pi = 0;
    std::optional<Rational> rational;
};

struct HolonomyOptions {
    double h = 1e-3;  // RK4 step in lift arclength
    long q_max = 64;
    double window = 1e-8;
};

// Frame (c, t, n) of the S2 curve of curvature k, transported over [0, length] in lift arclength
// (ds/du = 2/sqrt(1+k^2)), starting from the identity frame.
Eigen::Matrix3d frame_transport(const CurvatureProfile& k, double length, double h = 1e-3);

// Signed angle and axis of a rotation, axis oriented so that axis . ref >= 0.
std::pair<double, S2Point> rotation_angle_axis(const Eigen::Matrix3d& R, const S2Point& ref = S2Point(0, 0, 1));

HolonomyResult holonomy(const CurvatureProfile& k, const HolonomyOptions& opt = {});

// theta/pi of the holonomy of the n-stretched profile. n = 1 returns the holonomy of k itself.
double a_n(const CurvatureProfile& k, int n, const HolonomyOptions& opt = {});

// ||M(periods T) - M(0)||_F by direct integration over `periods` base periods.
double closure_residual(const CurvatureProfile& k, int periods, double h = 1e-3);

// Continued-fraction convergent within `window` of x with q <= q_max.
std::optional<Rational> rational_approx(double x, long q_max = 64, double window = 1e-8);

// Periods after which a rotation by (p/q) pi is the identity: q for even p, 2q for odd p.
long closure_order(Rational r);

using ProfileFamily = std::function<CurvatureProfile(double)>;

// k0 + eps cos(2 pi u / T) with fixed T.
ProfileFamily harmonic_family(double k0, double T);

// k0 + eps cos(2 pi u / P(eps)) where P(eps) makes the base holonomy a rotation by 2 pi / m,
// so the base curve closes after m periods.
double closing_period(double k0, double eps, int m, double h = 1e-3);
ProfileFamily closing_family(double k0, int m, double h = 1e-3);

struct SearchOptions {
    double tol = 1e-10;  // bisection width in the family parameter
    int scan_points = 16;
    HolonomyOptions hol;
};

struct SearchOutcome {
    CurvatureProfile profile;
    int n = 2;
    HolonomyResult achieved;
    Rational target;
    double parameter = 0;
    double closure_residual = 0;  // after closure_order(target) stretched periods
    bool validated = false;       // closure residual below 1e-4
    std::vector<std::pair<double, double>> scan;  // (parameter, a_n)
};

// Bisection for a_n(k_eps) = value inside [lo, hi]; the first sign change on a uniform scan is used.
// Throws NoSignChange with the scanned a_n range when none exists.
std::pair<double, std::vector<std::pair<double, double>>> solve_family(const ProfileFamily& family, int n,
                                                                       double value, double lo, double hi,
                                                                       const SearchOptions& opt = {});

SearchOutcome search_rational(const ProfileFamily& family, int n, Rational target, double lo, double hi,
                              const SearchOptions& opt = {});

nlohmann::json to_json(const SearchOutcome& s);

struct TorusOptions {
    std::optional<double> lambda;
    double h_target = 0.01;  // u step upper bound
    int nv = 257;
    GeometricCoeffs coeffs{Quaternion(0.0, 0.6, 0.0, 0.8), 0.0};
    int m_max = 64;
    double delta = 0.5;
    double closure_tol = 1e-6;
};

struct TorusBuild {
    FlatMapGrid base;
    SolutionGrid solution;
    ImmersionGrid surface;
    double U = 0, lambda = 0;
    int m_base = 0, m_stretched = 0;
    nlohmann::json report;
};

TorusBuild build_perturbed_torus(const SearchOutcome& outcome, const TorusOptions& opt = {});

struct CylinderOptions {
    std::optional<double> lambda;
    double U = 20.0;  // window length in u
    int nu = 2001, nv = 257;
    GeometricCoeffs coeffs{Quaternion(0.0, 0.6, 0.0, 0.8), 0.0};
    double delta = 0.5;
};

struct CylinderBuild {
    FlatMapGrid base;
    SolutionGrid solution;
    ImmersionGrid surface;
    double lambda = 0;
    nlohmann::json report;
};

CylinderBuild build_perturbed_cylinder(const CurvatureProfile& k, int n, const CylinderOptions& opt = {});

// max |margin(lambda) - sin w| over the valid nodes.
double margin_gap(const FlatMapGrid& m, const SolutionGrid& s, double lambda);

}  // namespace flat4
