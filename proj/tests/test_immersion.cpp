#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flat4/errors.hpp"
#include "flat4/immersion.hpp"
#include "flat4/torusearch.hpp"
#include "gen.hpp"

using namespace flat4;
using std::numbers::pi;

namespace {

double min_margin(const ImmersionGrid& im) {
    double m = 1e300;
    for (int i = im.valid.ilo; i <= im.valid.ihi; ++i)
        for (int j = im.valid.jlo; j <= im.valid.jhi; ++j) m = std::min(m, std::abs(im.margin(i, j)));
    return m;
}

CurvatureProfile wavy() {
    CurvatureProfile k = CurvatureProfile::circle(0.5);
    k.cos = {0.2};
    return k;
}

}  // namespace

TEST_CASE("constant solution gives f = N") {
    FlatMapGrid m = hopf_flat_map(wavy(), pi, 121, 97);
    ImmersionGrid im = assemble(m, geometric_solution(m, {Quaternion(), 1.0}));
    for (int i = im.valid.ilo; i <= im.valid.ihi; i += 5)
        for (int j = 0; j < m.geom.nv; j += 7) {
            CHECK(dist(im.f(i, j), m.F(i, j)) < 1e-12);
            CHECK(im.A(i, j) == doctest::Approx(1.0));
            CHECK(std::abs(im.B(i, j)) < 1e-12);
            CHECK(im.margin(i, j) == doctest::Approx(std::sin(m.w(i, j))).epsilon(1e-12));
            // the rotation (A,B) -> (Ahat,Bhat) preserves the norm
            CHECK(std::abs(im.Ahat(i, j) * im.Ahat(i, j) + im.Bhat(i, j) * im.Bhat(i, j) -
                           im.A(i, j) * im.A(i, j) - im.B(i, j) * im.B(i, j)) < 1e-10);
        }
    Tangency t = tangency_check(im, m);
    CHECK(t.r_u < 1e-5);
    CHECK(t.r_v < 1e-5);
    CHECK(t.normal < 1e-5);
    SphereFit f = sphere_fit(im);
    CHECK(f.center.norm() < 1e-8);
    CHECK(f.radius == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(f.rms < 1e-8);
}

TEST_CASE("frame verification") {
    CHECK(verify_frame(hopf_flat_map(CurvatureProfile::circle(0.0), pi, 129, 129)) < 1e-6);
    CHECK(verify_frame(helix_product_map(0.75, 0.75, GridGeom::spanning(0, 2, 201, 0, 2, 201))) < 1e-5);
    FlatMapGrid bad = hopf_flat_map(CurvatureProfile::circle(0.0), pi, 65, 65);
    bad.Fhat = bad.F;
    bad.factors.reset();
    CHECK(verify_frame(bad) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("helix family: margin and metric in closed form") {
    double mu = 0.75, a = 1 + mu * mu;
    GridGeom g = GridGeom::spanning(0, 2, 41, 0, 2, 41);
    FlatMapGrid m = helix_product_map(mu, mu, g);
    auto gf = ScalarFunction::sine(1, 1), hf = ScalarFunction::sine(0.5, 2);
    ImmersionGrid im = assemble(m, inhe_solution(g, mu, gf, hf));
    for (int i = 0; i < g.nu; i += 3)
        for (int j = 0; j < g.nv; j += 3) {
            double s = g.u(i) + g.v(j), d = g.u(i) - g.v(j);
            double phi = 2 * (a * gf.d1(s) + gf.d3(s));
            double psi = 2 * mu * (a * gf.f(s) + gf.d2(s)) + a * hf.f(d) + hf.d2(d);
            CHECK(im.E(i, j) == doctest::Approx(phi * phi + psi * psi).epsilon(1e-10));
            CHECK(im.margin(i, j) == doctest::Approx(2 * phi * psi).epsilon(1e-9));
        }
    // the surface is singular at the origin although phi^2 + psi^2 > 0 there
    CHECK(std::abs(im.margin(0, 0)) < 1e-12);
    CHECK(im.E(0, 0) > 1);
}

TEST_CASE("exponential cylinder") {
    GridGeom g = GridGeom::spanning(0, 1, 161, 0, 1, 161);
    FlatMapGrid m = helix_product_map(2, 1, g);
    ImmersionGrid im = assemble(m, exponential_solution(g, 2, 1));
    Tangency t = tangency_check(im, m);
    CHECK(t.r_u < 1e-4);
    CHECK(t.r_v < 1e-4);
    CHECK(min_margin(im) > 1e-3);
    CHECK(metric_identity_residual(im) < 1e-4);
    CHECK(flatness_check(im).max_abs_K < 1e-3);
    CHECK(system_residual(coefficient_solution(im), m.omega, DerivativeMode::finite_difference).max() < 1e-3);
}

TEST_CASE("flatness of the Clifford torus and a product of curves") {
    FlatMapGrid c = hopf_flat_map(CurvatureProfile::circle(0.0), pi, 257, 257);
    ImmersionGrid ic = assemble(c, geometric_solution(c, {Quaternion(), 1.0}));
    CHECK(flatness_check(ic).max_abs_K < 1e-4);
    // a wave solution at the constant angle pi/2 of the Clifford map
    SolutionGrid w = wave_solution(c.geom, pi / 2, ScalarFunction::sine(0.3, 1), ScalarFunction::sine(0.2, 2));
    for (int i = 0; i < c.geom.nu; ++i)
        for (int j = 0; j < c.geom.nv; ++j) w.alpha(i, j) += 1;
    ImmersionGrid iw = assemble(c, w);
    CHECK(min_margin(iw) > 0.05);
    CHECK(flatness_check(iw).max_abs_K < 1e-3);
    CHECK(metric_identity_residual(iw) < 1e-4);
}

TEST_CASE("sphere fit recognises geometric solutions") {
    FlatMapGrid m = hopf_flat_map(wavy(), pi, 121, 97);
    ImmersionGrid g = assemble(m, geometric_solution(m, {Quaternion(1, 0, 0, 0), 1.0}));
    SphereFit f = sphere_fit(g);
    CHECK(f.rms < 1e-6);
    // alpha = <e1, N> + 1 places f on a sphere centred at e1 of radius 1
    CHECK(dist(f.center, Quaternion(1, 0, 0, 0)) < 1e-6);
    CHECK(f.radius == doctest::Approx(1.0).epsilon(1e-6));
    auto st = stretched_solution(wavy(), 2, {Quaternion(0, 0.6, 0, 0.8), 0}, m.geom);
    ImmersionGrid s = assemble(m, lambda_rescale(st.solution, 0.25));
    CHECK(sphere_fit(s).rms > 1e-2);
}

TEST_CASE("degenerate metric and grid mismatch") {
    FlatMapGrid m = hopf_flat_map(wavy(), pi, 41, 41);
    SolutionGrid zero = geometric_solution(m, {Quaternion(), 0.0});
    ImmersionGrid z = assemble(m, zero);
    try {
        flatness_check(z);
        FAIL("expected DegenerateMetric");
    } catch (const Error& e) {
        CHECK(e.code() == "DegenerateMetric");
    }
    FlatMapGrid other = hopf_flat_map(wavy(), pi, 43, 41);
    CHECK_THROWS_AS(assemble(other, zero), Error);
}

TEST_CASE("lambda rescaling") {
    FlatMapGrid m = hopf_flat_map(wavy(), pi, 161, 129);
    auto st = stretched_solution(wavy(), 2, {Quaternion(0, 0.6, 0, 0.8), 0}, m.geom);
    SolutionGrid l0 = lambda_rescale(st.solution, 0.0);
    for (int i = 0; i < m.geom.nu; i += 11) {
        CHECK(l0.alpha(i, 5) == 1.0);
        CHECK(l0.beta(i, 5) == 0.0);
    }
    ImmersionGrid i0 = assemble(m, l0);
    for (int i = i0.valid.ilo; i <= i0.valid.ihi; i += 9)
        CHECK(i0.margin(i, 3) == doctest::Approx(std::sin(m.w(i, 3))).epsilon(1e-12));
    auto mode = DerivativeMode::finite_difference;
    double r = system_residual(st.solution, m.omega, mode).max();
    for (double lam : {1.0, 0.5, 0.1})
        CHECK(system_residual(lambda_rescale(st.solution, lam), m.omega, mode).max() <= r * lam + 1e-10);
    double prev = 1e300;
    for (double lam : {1.0, 0.5, 0.25, 0.125}) {
        double gap = margin_gap(m, st.solution, lam);
        CHECK(gap < prev);
        prev = gap;
    }
    double lam = auto_lambda(m, st.solution);
    CHECK(lam > 0);
    CHECK(lam <= 1);
    ImmersionGrid im = assemble(m, lambda_rescale(st.solution, lam));
    double mm = 1e300;
    for (int i = im.valid.ilo; i <= im.valid.ihi; ++i)
        for (int j = 0; j < m.geom.nv; ++j) mm = std::min(mm, im.margin(i, j));
    CHECK(mm > 0.5 * min_sin_omega(m));
    CHECK(min_metric_eigenvalue(im) > 0);
}

TEST_CASE("auto lambda fails when sin omega vanishes") {
    // omega = 2u vanishes at u = 0, so no rescaling keeps the margin positive
    GridGeom g = GridGeom::spanning(0, 1, 41, 0, 1, 41);
    FlatMapGrid m = helix_product_map(1.0, 0.0, g);
    SolutionGrid s = geometric_solution(m, {Quaternion(), 1.0});
    CHECK_THROWS_AS(auto_lambda(m, s), Error);
}

TEST_CASE("property: diagnostics on random stretched surfaces") {
    gen::Rng rng(51);
    for (int t = 0; t < 3; ++t) {
        CurvatureProfile k = CurvatureProfile::circle(rng.uniform(0.3, 1.0));
        k.cos = {rng.uniform(-0.2, 0.2)};
        FlatMapGrid m = hopf_flat_map(k, pi, 201, 129);
        Quaternion a = rng.quaternion(1.0);
        auto st = stretched_solution(k, 2, {a, 0}, m.geom);
        SolutionGrid s = lambda_rescale(st.solution, auto_lambda(m, st.solution));
        ImmersionGrid im = assemble(m, s);
        Tangency tg = tangency_check(im, m);
        CHECK(tg.r_u < 1e-4);
        CHECK(tg.r_v < 1e-4);
        CHECK(metric_identity_residual(im) < 1e-4);
        CHECK(system_residual(coefficient_solution(im), m.omega, DerivativeMode::finite_difference).max() < 1e-3);
        CHECK(flatness_check(im).max_abs_K < 1e-3);
        CHECK(singular_sets_agree(im));
        for (int i = im.valid.ilo; i <= im.valid.ihi; i += 13)
            for (int j = 0; j < m.geom.nv; j += 11) {
                CHECK(im.E(i, j) == doctest::Approx(im.G(i, j)).epsilon(1e-12));
                double det = im.E(i, j) * im.G(i, j) - im.Fm(i, j) * im.Fm(i, j);
                CHECK(det == doctest::Approx(im.margin(i, j) * im.margin(i, j)).epsilon(1e-9));
            }
    }
}
