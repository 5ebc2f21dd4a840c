#pragma once

#include <array>
#include <functional>
#include <string>

#include "flat4/curve.hpp"
#include "flat4/flatmap.hpp"
#include "flat4/grid.hpp"

namespace flat4 {

// The system alpha_v = cos w alpha_u + sin w beta_u, beta_v = sin w alpha_u - cos w beta_u.

enum class SolutionTag { wave, geometric, stretched, inhe, exponential, transformZ, numeric, rescaled, derived };
std::string tag_name(SolutionTag t);

struct SolutionGrid {
    GridGeom geom;
    Array2<double> alpha, beta;
    // Analytic derivatives; empty when the family has no closed form.
    Array2<double> au, av, auu, bu, bv, buu;
    SolutionTag tag = SolutionTag::numeric;

    bool has_derivatives() const { return !au.empty(); }
    void allocate(bool with_derivatives);

    // Analytic value when present, otherwise fourth-order differences (interior nodes only).
    double alpha_u(int i, int j) const;
    double alpha_v(int i, int j) const;
    double alpha_uu(int i, int j) const;
    double beta_u(int i, int j) const;
    double beta_v(int i, int j) const;
    double beta_uu(int i, int j) const;
};

// A scalar function of one variable with three derivatives.
struct ScalarFunction {
    std::function<double(double)> f, d1, d2, d3;

    static ScalarFunction constant(double c);
    // amp sin(freq t + phase)
    static ScalarFunction sine(double amp, double freq, double phase = 0.0);
    static ScalarFunction zero() { return constant(0.0); }
};

enum class DerivativeMode { automatic, finite_difference };

struct SystemResidual {
    double r_alpha = 0, r_beta = 0;
    double max() const { return r_alpha > r_beta ? r_alpha : r_beta; }
};

SystemResidual system_residual(const SolutionGrid& s, const AngleFunction& omega,
                               DerivativeMode mode = DerivativeMode::automatic);

// Constant angle c: (alpha, beta) = f(u+v) e+ + g(u-v) e-, with e+ = (cos c/2, sin c/2) and
// e- = (-sin c/2, cos c/2) the eigenvectors of the coefficient matrix.
SolutionGrid wave_solution(const GridGeom& g, double c, const ScalarFunction& f, const ScalarFunction& gm);
SolutionGrid wave_solution(const GridGeom& g, const AngleFunction& omega, const ScalarFunction& f,
                           const ScalarFunction& gm);

// (alpha, beta) = (<a, N> + rho, <a, Nhat>).
struct GeometricCoeffs {
    Quaternion a;
    double rho = 0;
};
SolutionGrid geometric_solution(const FlatMapGrid& m, const GeometricCoeffs& c);

// Geometric solution of the Hopf map of k(u/n), evaluated at (nu, nv) on grid g.
struct StretchedResult {
    SolutionGrid solution;
    FlatMapGrid stretched_map;
};
StretchedResult stretched_solution(const CurvatureProfile& k, int n, const GeometricCoeffs& c, const GridGeom& g);

// Angle 2 mu (u+v): phi = 2 g'(u+v), psi = 2 mu g(u+v) + h(u-v),
// alpha = phi cos(mu(u+v)) + psi sin(mu(u+v)), beta = -psi cos(mu(u+v)) + phi sin(mu(u+v)).
SolutionGrid inhe_solution(const GridGeom& gr, double mu, const ScalarFunction& g, const ScalarFunction& h);

// Angle 2 r u + 2 s v: alpha + i beta = (1 - i) e^{su+rv} e^{i(ru+sv)}.
SolutionGrid exponential_solution(const GridGeom& g, double r, double s);

enum class Quadrature { trapezoid, simpson };

struct TransformOptions {
    std::array<double, 2> y0{0.0, 0.0};  // Y at the grid origin
    Quadrature quad = Quadrature::simpson;
    double path_tol = 1e-4;
};

// Y_u = L X, Y_v = H X; Z_u = L Y, Z_v = H^-1 Y, with L = [[c1, s1], [s1, -c1]] and
// H = [[c2, s2], [-s2, c2]] built from omega1(u), omega2(v). Z vanishes at the origin.
SolutionGrid transform_Z(const SolutionGrid& X, const AngleFunction& omega, const TransformOptions& opt = {});

// First-order upwind marching in v from the data on the first row v = v0.
struct NumericOptions {
    bool periodic_u = false;
    double cfl = 0.5;
};
SolutionGrid solve_numeric(const GridGeom& g, const AngleFunction& omega, const std::function<double(double)>& alpha0,
                           const std::function<double(double)>& beta0, const NumericOptions& opt = {});

// a X1 + b X2 on a shared grid; derivatives combine when both carry them.
SolutionGrid combine(double a, const SolutionGrid& x1, double b, const SolutionGrid& x2);

}  // namespace flat4
