#pragma once

#include "flat4/flatmap.hpp"
#include "flat4/hypsys.hpp"

namespace flat4 {

// Nodes where the solution has usable derivatives: everything when analytic, else two nodes in.
struct NodeRange {
    int ilo = 0, ihi = -1, jlo = 0, jhi = -1;
    bool contains(int i, int j) const { return i >= ilo && i <= ihi && j >= jlo && j <= jhi; }
    NodeRange shrink(int k) const { return {ilo + k, ihi - k, jlo + k, jhi - k}; }
};

// f = alpha N + beta Nhat + alpha_u N_u + beta_u Nhat_u with per-node diagnostics.
// Arrays hold NaN outside `valid`.
struct ImmersionGrid {
    GridGeom geom;
    NodeRange valid;
    Array2<Quaternion> f;
    Array2<double> A, B, Ahat, Bhat, margin, E, Fm, G, K_est;
    double frame_residual = 0;
};

// A = alpha + alpha_uu + w_u beta_u, B = beta + beta_uu - w_u alpha_u.
struct Coefficients {
    Array2<double> A, B, margin;
};
Coefficients coefficients(const FlatMapGrid& m, const SolutionGrid& s);

NodeRange valid_range(const FlatMapGrid& m, const SolutionGrid& s);

ImmersionGrid assemble(const FlatMapGrid& m, const SolutionGrid& s);

// Max deviation of the Gram matrix of {N, Nhat, N_u, Nhat_u} from the identity (finite differences).
double verify_frame(const FlatMapGrid& m);

struct Tangency {
    double r_u = 0, r_v = 0;
    double normal = 0;  // max |<f_u or f_v, N or Nhat>|
};
Tangency tangency_check(const ImmersionGrid& im, const FlatMapGrid& m);

// Max deviation of differenced <f_u,f_u>, <f_u,f_v>, <f_v,f_v> from the stored E, F, G.
double metric_identity_residual(const ImmersionGrid& im);

// (A, B) as a solution grid; its system residual checks that it solves the system again.
SolutionGrid coefficient_solution(const ImmersionGrid& im);

struct Flatness {
    double max_abs_K = 0;
    int evaluated = 0;
    int degenerate = 0;  // interior nodes with 1e-10 <= EG - F^2 <= 1e-8, skipped
};
// Brioschi curvature of the stored metric; throws DegenerateMetric below 1e-10.
Flatness flatness_check(const ImmersionGrid& im);

struct SphereFit {
    Quaternion center;
    double radius = 0, rms = 0;
};
SphereFit sphere_fit(const ImmersionGrid& im);

// Minimum over interior nodes of the smaller metric eigenvalue E - |F| (E = G).
double min_metric_eigenvalue(const ImmersionGrid& im);

// Nodes with |margin| < tol and nodes with EG - F^2 < tol^2 agree within one cell.
bool singular_sets_agree(const ImmersionGrid& im, double tol = 1e-8);

SolutionGrid lambda_rescale(const SolutionGrid& s, double lambda);

// Halves lambda from 1 until min margin > delta min sin w.
double auto_lambda(const FlatMapGrid& m, const SolutionGrid& s, double delta = 0.5);

double min_sin_omega(const FlatMapGrid& m);

}  // namespace flat4
