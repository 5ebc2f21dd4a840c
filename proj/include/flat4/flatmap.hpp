#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "flat4/curve.hpp"
#include "flat4/grid.hpp"
#include "flat4/quat.hpp"

namespace flat4 {

// omega(u, v) = omega1(u) + omega2(v).
struct AngleFunction {
    std::function<double(double)> w1, w2, dw1, dw2;
    std::optional<double> constant_value;  // set when both parts are constant

    double operator()(double u, double v) const { return w1(u) + w2(v); }
    double du(double u) const { return dw1(u); }
    double dv(double v) const { return dw2(v); }
    bool is_constant() const { return constant_value.has_value(); }

    static AngleFunction constant(double c);
    // omega = a u + b v + c.
    static AngleFunction linear(double a, double b, double c = 0.0);
    // Piecewise-linear interpolation of samples; exact at nodes.
    static AngleFunction sampled(double u0, double hu, std::vector<double> w1, std::vector<double> dw1, double v0,
                                 double hv, std::vector<double> w2, std::vector<double> dw2);
};

// F = L(u) R(v), Fhat = L(u) xi R(v), with analytic derivatives of both factors.
struct ProductFactors {
    std::vector<Quaternion> L, Lu, Luu, R, Rv, Rvv;
    Quaternion xi;
};

struct FlatMapGrid {
    GridGeom geom;
    Array2<Quaternion> F, Fhat;
    AngleFunction omega;
    std::optional<std::pair<double, double>> lattice;
    std::optional<ProductFactors> factors;

    double w(int i, int j) const { return omega(geom.u(i), geom.v(j)); }
    double w_u(int i) const { return omega.du(geom.u(i)); }

    // Frame derivatives: analytic when factors are present, else fourth-order differences
    // (valid two nodes away from the edges).
    Quaternion Nu(int i, int j) const;
    Quaternion Nv(int i, int j) const;
    Quaternion Nuu(int i, int j) const;
    Quaternion Nhu(int i, int j) const;
    Quaternion Nhv(int i, int j) const;
    Quaternion Nhuu(int i, int j) const;
    bool analytic() const { return factors.has_value(); }
};

// Build the grid of a product from sampled factors on the given grid nodes.
FlatMapGrid product_grid(const GridGeom& g, ProductFactors pf, AngleFunction omega);

// Bianchi-Spivak product of two unit-speed curves through 1. Checks the side conditions
// <a1^-1 a1', xi0> = 0 = <a2' a2^-1, xi0> to 1e-6.
FlatMapGrid bianchi_spivak_product(const S3Curve& a1, const S3Curve& a2, const Quaternion& xi0);

// Product with the second factor conjugated: F = a1 conj(a2).
FlatMapGrid kitagawa_product(const S3Curve& a1, const S3Curve& a2, const Quaternion& xi0);

// The product conjugation can also be applied to a curve directly.
S3Curve conjugate_curve(const S3Curve& c);

// Admissible closed-form helix factors with angle 2 mu1 u + 2 mu2 v.
// a1 = exp(u(i + mu1 j)) exp(-mu1 u j), a2 = exp(-mu2 v j) exp(v(i + mu2 j)).
S3Curve helix_factor_left(double mu, double u0, double u1, double h);
S3Curve helix_factor_right(double mu, double v0, double v1, double h);

// Product of the helix factors over a rectangle with xi0 = j.
FlatMapGrid helix_product_map(double mu1, double mu2, const GridGeom& g);

// mu = (r^2 - 1) / (2 r).
inline double helix_mu(double r) { return (r * r - 1.0) / (2.0 * r); }

// F = a(u) e^{iv}, Fhat = a(u) (-j) e^{iv} with a the asymptotic lift of k; omega = arccot k in (0, pi).
// nu, nv include both endpoints; v spans [v0, v0 + V].
struct HopfOptions {
    int substeps = 0;  // 0 picks enough RK4 substeps for an inner step of at most 1e-3
    double v0 = 0;
    double u0 = 0;
    double V = 6.283185307179586476925;  // v span
};
FlatMapGrid hopf_flat_map(const CurvatureProfile& k, double U, int nu, int nv, const HopfOptions& opt = {});

// Residuals of the flat-map relations at interior nodes (finite differences of the stored arrays).
struct FlatMapResiduals {
    double metric = 0;          // <dF,dF> = du^2 + 2 cos w du dv + dv^2
    double polar_orthogonal = 0;  // <F,Fhat> = 0
    double second_form = 0;     // <dF,dFhat> = 2 sin w du dv
    double tangent_polar = 0;   // <dF,Fhat> = 0
    double polar_tangent = 0;   // <F,dFhat> = 0
    double polar_metric = 0;    // <dFhat,dFhat> = du^2 - 2 cos w du dv + dv^2
    double gauss_map_metric = 0;  // <dF,dF> + <dFhat,dFhat> = 2(du^2 + dv^2)
    double omega_uv = 0;        // mixed derivative of the stored angle
    double max() const;
};
FlatMapResiduals verify_flat_map(const FlatMapGrid& g);

// max |1 + det(II)/det(I)| over nodes with det(I) > 1e-6.
double gauss_equation_residual(const FlatMapGrid& g);

// (F, Fhat, w) -> (Fhat, -F, w + pi).
FlatMapGrid polar_swap(const FlatMapGrid& g);

}  // namespace flat4
