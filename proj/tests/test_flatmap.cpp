#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flat4/errors.hpp"
#include "flat4/flatmap.hpp"
#include "gen.hpp"

using namespace flat4;
using std::numbers::pi;

namespace {

// Samples q(t) = exp(t p) with analytic derivatives, p pure.
S3Curve exp_curve(const Quaternion& p, double t1, double h, bool left) {
    S3Curve c;
    c.h = h;
    auto n = static_cast<std::size_t>(std::llround(t1 / h)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        Quaternion a = qexp(c.u(i) * p);
        c.samples.push_back(a);
        c.d1.push_back(left ? a * p : p * a);
        c.d2.push_back(a * p * p);
    }
    return c;
}

double max_angle_error(const FlatMapGrid& g, const std::function<double(double, double)>& ref) {
    double e = 0;
    for (int i = 0; i < g.geom.nu; ++i)
        for (int j = 0; j < g.geom.nv; ++j) e = std::max(e, std::abs(g.w(i, j) - ref(g.geom.u(i), g.geom.v(j))));
    return e;
}

}  // namespace

TEST_CASE("helix factors are helices of the expected curvature and opposite torsion") {
    for (double r : {1.5, 2.0, 3.0}) {
        double mu = helix_mu(r);
        // arclength of the factors is u, so curvature uses the factor parameter directly
        S3Curve a1 = helix_factor_left(mu, 0, 2, 1e-3), a2 = helix_factor_right(mu, 0, 2, 1e-3);
        double kap = std::sqrt(4 * mu * mu + 0.0);
        auto f1 = frenet_s3(a1), f2 = frenet_s3(a2);
        for (std::size_t n = 0; n < f1.size(); n += 97) {
            CHECK(std::abs(f1[n].speed - 1) < 1e-6);
            CHECK(std::abs(f1[n].kappa - kap) < 1e-5);
            CHECK(std::abs(f2[n].kappa - kap) < 1e-5);
            CHECK(f1[n].tau * f2[n].tau < 0);
            CHECK(std::abs(std::abs(f1[n].tau) - 1) < 1e-5);
        }
    }
}

TEST_CASE("helix product angle equals 2 mu (u+v)") {
    double mu = helix_mu(2.0);
    CHECK(mu == doctest::Approx(0.75));
    S3Curve a1 = helix_factor_left(mu, 0, 2, 1e-2), a2 = helix_factor_right(mu, 0, 2, 1e-2);
    FlatMapGrid g = bianchi_spivak_product(a1, a2, Quaternion::j());
    CHECK(max_angle_error(g, [&](double u, double v) { return 2 * mu * (u + v); }) < 1e-5);
    CHECK(verify_flat_map(g).max() < 1e-5);
    FlatMapGrid c = helix_product_map(mu, mu, GridGeom::spanning(0, 2, 201, 0, 2, 201));
    CHECK(max_angle_error(c, [&](double u, double v) { return 2 * mu * (u + v); }) < 1e-12);
}

TEST_CASE("orthogonal great circles give the Clifford torus") {
    S3Curve a1 = exp_curve(-1.0 * Quaternion::k(), 2 * pi, pi / 100, true);
    S3Curve a2 = exp_curve(Quaternion::i(), 2 * pi, pi / 100, false);
    FlatMapGrid g = bianchi_spivak_product(a1, a2, Quaternion::j());
    CHECK(max_angle_error(g, [](double, double) { return pi / 2; }) < 1e-12);
    CHECK(verify_flat_map(g).max() < 1e-5);
    // product torus closed form: F = (cos u cos v, cos u sin v, -sin u sin v, -sin u cos v)
    for (int i = 0; i < g.geom.nu; i += 17)
        for (int j = 0; j < g.geom.nv; j += 13) {
            double u = g.geom.u(i), v = g.geom.v(j);
            Quaternion ref{std::cos(u) * std::cos(v), std::cos(u) * std::sin(v), -std::sin(u) * std::sin(v),
                           -std::sin(u) * std::cos(v)};
            CHECK(dist(g.F(i, j), ref) < 1e-12);
        }
}

TEST_CASE("product preconditions") {
    double mu = 0.75;
    S3Curve raw = helix(2, 1, 0, 1, 1e-2);  // does not start at 1
    CHECK_THROWS_AS(bianchi_spivak_product(raw, helix_factor_right(mu, 0, 1, 1e-2), Quaternion::j()), Error);
    // a left factor whose velocity has a j component breaks the side condition
    S3Curve bad = exp_curve(Quaternion(0, 0.6, 0.8, 0), 1, 1e-2, true);
    try {
        bianchi_spivak_product(bad, helix_factor_right(mu, 0, 1, 1e-2), Quaternion::j());
        FAIL("expected PreconditionViolated");
    } catch (const Error& e) {
        CHECK(e.code() == "PreconditionViolated");
        CHECK(e.detail().at("left_side_residual").get<double>() == doctest::Approx(0.8));
    }
}

TEST_CASE("conjugated product form") {
    double mu = 0.5;
    S3Curve a1 = helix_factor_left(mu, 0, 1, 1e-2);
    S3Curve a2c = conjugate_curve(helix_factor_right(mu, 0, 1, 1e-2));
    FlatMapGrid g = kitagawa_product(a1, a2c, Quaternion::j());
    CHECK(verify_flat_map(g).max() < 1e-5);
    CHECK(max_angle_error(g, [&](double u, double v) { return 2 * mu * (u + v); }) < 1e-5);
}

TEST_CASE("hopf flat map angle and fibers") {
    FlatMapGrid c = hopf_flat_map(CurvatureProfile::circle(0.0), pi, 101, 101);
    CHECK(max_angle_error(c, [](double, double) { return pi / 2; }) < 1e-14);
    FlatMapGrid g = hopf_flat_map(CurvatureProfile::circle(1.0), pi, 101, 101);
    CHECK(max_angle_error(g, [](double, double) { return pi / 4; }) < 1e-8);
    for (int i = 0; i < g.geom.nu; i += 10)
        for (int j = 0; j < g.geom.nv; ++j) CHECK((hopf(g.F(i, j)) - hopf(g.F(i, 0))).norm() < 1e-8);
    CHECK(verify_flat_map(g).max() < 1e-5);
}

TEST_CASE("corrupted polar map is detected") {
    FlatMapGrid g = hopf_flat_map(CurvatureProfile::circle(0.3), pi, 41, 41);
    g.Fhat = g.F;
    g.factors.reset();
    CHECK(verify_flat_map(g).polar_orthogonal == doctest::Approx(1.0));
}

TEST_CASE("property: random helix pairs") {
    gen::Rng rng(31);
    for (int t = 0; t < 8; ++t) {
        double m1 = rng.uniform(-1.5, 1.5), m2 = rng.uniform(-1.5, 1.5);
        FlatMapGrid g = helix_product_map(m1, m2, GridGeom::spanning(0, 1.5, 121, 0, 1.5, 121));
        FlatMapResiduals r = verify_flat_map(g);
        CHECK(r.max() < 1e-5);
        CHECK(r.gauss_map_metric < 1e-5);
        S3Curve a1 = helix_factor_left(m1, 0, 1.5, 0.0125), a2 = helix_factor_right(m2, 0, 1.5, 0.0125);
        FlatMapGrid p = bianchi_spivak_product(a1, a2, Quaternion::j());
        CHECK(max_angle_error(p, [&](double u, double v) { return 2 * m1 * u + 2 * m2 * v; }) < 1e-5);
    }
}

TEST_CASE("property: hopf maps of random profiles") {
    gen::Rng rng(32);
    for (int t = 0; t < 5; ++t) {
        CurvatureProfile k = rng.profile();
        FlatMapGrid g = hopf_flat_map(k, k.T, 201, 129);
        FlatMapResiduals r = verify_flat_map(g);
        CHECK(r.max() < 1e-5);
        CHECK(gauss_equation_residual(g) < 1e-3);
        FlatMapGrid s = polar_swap(g);
        CHECK(verify_flat_map(s).max() < 1e-5);
        CHECK(std::abs(s.w(7, 3) - g.w(7, 3) - pi) < 1e-14);
        // branch (0, pi)
        for (int i = 0; i < g.geom.nu; ++i) CHECK((g.w(i, 0) > 0 && g.w(i, 0) < pi));
    }
}
