#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "flat4/errors.hpp"
#include "flat4/torusearch.hpp"
#include "gen.hpp"

using namespace flat4;
using std::numbers::pi;

namespace {

double so3_defect(const Eigen::Matrix3d& R) {
    return std::max((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
                    std::abs(R.determinant() - 1));
}

// Distance from x to the nearest p/q with q <= 8.
double rational_distance(double x) {
    double d = 1e300;
    for (int q = 1; q <= 8; ++q) d = std::min(d, std::abs(x - std::round(x * q) / q));
    return d;
}

}  // namespace

TEST_CASE("stretch profile") {
    CurvatureProfile c = stretch_profile(CurvatureProfile::circle(0.4), 3);
    CHECK(c.T == doctest::Approx(3 * pi));
    CHECK(c(1.3) == doctest::Approx(0.4));
    CurvatureProfile k = CurvatureProfile::circle(0.0, 2.0);
    k.cos = {1.0};
    CurvatureProfile s = stretch_profile(k, 2);
    CHECK(s.T == doctest::Approx(4.0));
    for (double u : {0.0, 0.3, 1.7, 3.9}) {
        CHECK(s(u) == doctest::Approx(std::cos(pi * u / 2.0)).epsilon(1e-14));
        CHECK(std::abs(std::atan2(1, s(2 * u)) - std::atan2(1, k(u))) < 1e-12);
    }
}

TEST_CASE("holonomy of circles") {
    for (double k0 : {0.0, 0.5, -1.2}) {
        HolonomyResult h = holonomy(CurvatureProfile::circle(k0));
        CHECK(std::abs(h.theta_over_pi) < 1e-6);
        REQUIRE(h.rational);
        CHECK(h.rational->p == 0);
        // half a loop: rotation by pi about the circle axis
        HolonomyResult half = holonomy(CurvatureProfile::circle(k0, pi / 2));
        CHECK(std::abs(std::abs(half.theta) - pi) < 1e-6);
        S2Point axis = S2Point(k0, 0, 1).normalized();
        CHECK(std::abs(std::abs(half.axis.dot(axis)) - 1) < 1e-6);
    }
    for (int n : {2, 3}) CHECK(std::abs(a_n(CurvatureProfile::circle(0.7), n)) < 1e-6);
}

TEST_CASE("rational approximation and closure order") {
    auto r = rational_approx(-2.0 / 7.0);
    REQUIRE(r);
    CHECK(r->p == -2);
    CHECK(r->q == 7);
    CHECK_FALSE(rational_approx(std::sqrt(2.0) - 1, 64, 1e-8));
    auto z = rational_approx(3e-9);
    REQUIRE(z);
    CHECK(z->p == 0);
    CHECK(closure_order({2, 7}) == 7);
    CHECK(closure_order({1, 3}) == 6);
    CHECK(closure_order({0, 1}) == 1);
}

TEST_CASE("rotation angle and axis") {
    Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 2).normalized()).toRotationMatrix();
    auto [t, a] = rotation_angle_axis(R, S2Point(0, 0, 1));
    CHECK(t == doctest::Approx(0.7));
    CHECK((a - Eigen::Vector3d(1, 2, 2).normalized()).norm() < 1e-12);
    // reversing the reference flips the sign of the angle
    auto [t2, a2] = rotation_angle_axis(R, S2Point(0, 0, -1));
    CHECK(t2 == doctest::Approx(-0.7));
    CHECK((a2 + a).norm() < 1e-12);
}

TEST_CASE("property: holonomy rotations lie in SO(3) and a_1 is the holonomy") {
    gen::Rng rng(61);
    for (int t = 0; t < 8; ++t) {
        CurvatureProfile k = rng.profile(rng.uniform(1.0, 4.0));
        HolonomyResult h = holonomy(k);
        CHECK(so3_defect(h.rotation) < 1e-8);
        CHECK(std::abs(std::cos(h.theta) - (h.rotation.trace() - 1) / 2) < 1e-8);
        CHECK(a_n(k, 1) == doctest::Approx(h.theta_over_pi).epsilon(1e-14));
        HolonomyResult h2 = holonomy(stretch_profile(k, 2));
        CHECK(so3_defect(h2.rotation) < 1e-8);
    }
}

TEST_CASE("a_n is continuous in the family parameter") {
    ProfileFamily fam = harmonic_family(1.0, pi);
    double base = a_n(fam(0.5), 2), prev = 1e300;
    for (double e : {1e-2, 1e-3, 1e-4}) {
        double d = std::abs(a_n(fam(0.5 + e), 2) - base);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("closing family closes the base curve") {
    for (double eps : {0.3, 0.8}) {
        double P = closing_period(1.0, eps, 2);
        CurvatureProfile k = closing_family(1.0, 2)(eps);
        CHECK(k.T == doctest::Approx(P));
        HolonomyResult h = holonomy(k);
        CHECK(std::abs(std::abs(h.theta_over_pi) - 1) < 1e-9);
        CHECK(closure_residual(k, 2) < 1e-8);
    }
    CHECK(closing_period(1.0, 0.0, 2) == doctest::Approx(pi / 2).epsilon(1e-9));
}

TEST_CASE("search examples") {
    ProfileFamily fam = closing_family(1.0, 2);
    SearchOutcome zero = search_rational(fam, 2, {0, 1}, 0.0, 0.1);
    CHECK(std::abs(zero.parameter) < 1e-9);
    CHECK(zero.validated);
    // a_2 is monotone on this bracket, so 0 is not attained away from the circle
    CHECK_THROWS_AS(search_rational(fam, 2, {0, 1}, 0.2, 1.0), Error);
    try {
        search_rational(fam, 2, {1, 2}, 0.0, 1.2);
        FAIL("expected NoSignChange");
    } catch (const Error& e) {
        CHECK(e.code() == "NoSignChange");
        CHECK(e.detail().at("a_n_max").get<double>() < 0.5);
        CHECK(e.detail().at("scan").size() > 3);
    }
    SearchOutcome half = search_rational(fam, 2, {-1, 2}, 0.0, 1.2);
    CHECK(std::abs(half.achieved.theta_over_pi + 0.5) < 1e-9);
    CHECK(half.validated);
    CHECK(half.closure_residual < 1e-4);
    auto j = to_json(half);
    CHECK(j.at("rational")[0] == -1);
    CHECK(j.at("rational")[1] == 2);
}

TEST_CASE("property (P): rational and far-from-rational profiles") {
    struct Case {
        double k0, value;
        Rational r;
    };
    SUBCASE("rational values close after the closure order") {
        const Case cases[] = {{1.0, -2.0 / 7, {-2, 7}},
                              {1.0, -2.0 / 5, {-2, 5}},
                              {1.0, -4.0 / 7, {-4, 7}},
                              {1.0, -2.0 / 3, {-2, 3}},
                              {0.5, -4.0 / 5, {-4, 5}}};
        for (const Case& c : cases) {
            ProfileFamily fam = closing_family(c.k0, 2);
            double eps = solve_family(fam, 2, c.value, 0.0, 1.4).first;
            CurvatureProfile k = fam(eps);
            double a = a_n(k, 2);
            CHECK(std::abs(a - c.value) < 1e-6);
            auto r = rational_approx(a, 8, 1e-6);
            REQUIRE(r);
            CHECK(r->q == c.r.q);
            CHECK(closure_residual(stretch_profile(k, 2), static_cast<int>(closure_order(*r))) < 1e-3);
        }
    }
    SUBCASE("far values never close within sixteen periods") {
        for (double value : {-0.06, -0.31, -0.46, -0.535, -0.69}) {
            ProfileFamily fam = closing_family(1.0, 2);
            CurvatureProfile k = fam(solve_family(fam, 2, value, 0.0, 1.4).first);
            double a = a_n(k, 2);
            CHECK(rational_distance(a) >= 1e-2);
            for (int N : {1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16})
                CHECK(closure_residual(stretch_profile(k, 2), N) > 1e-2);
        }
    }
}

TEST_CASE("torus pipeline") {
    ProfileFamily fam = closing_family(1.0, 2);
    SUBCASE("circle control is spherical in the lambda -> 0 limit") {
        SearchOutcome c = search_rational(fam, 2, {0, 1}, 0.0, 0.1);
        TorusOptions opt;
        opt.nv = 129;
        opt.lambda = 0.0;
        TorusBuild b = build_perturbed_torus(c, opt);
        CHECK(b.report.at("degenerate").get<bool>());
        CHECK(b.report.at("sphere_fit_rms").get<double>() < 1e-6);
        CHECK_FALSE(b.report.at("assertions").at("omega_nonconstant").get<bool>());
    }
    SUBCASE("forced large lambda is singular") {
        SearchOutcome o = search_rational(fam, 2, {-1, 2}, 0.0, 1.2);
        TorusOptions opt;
        opt.lambda = 10.0;
        opt.nv = 129;
        try {
            build_perturbed_torus(o, opt);
            FAIL("expected SingularAfterRescale");
        } catch (const Error& e) {
            CHECK(e.code() == "SingularAfterRescale");
        }
    }
    SUBCASE("fixed-period family does not give a closed base curve") {
        SearchOutcome o = search_rational(harmonic_family(-1.0, pi), 2, {1, 3}, 0.0, 1.2);
        CHECK(o.validated);
        CHECK_THROWS_AS(build_perturbed_torus(o), Error);
    }
}

TEST_CASE("cylinder at lambda zero is the Hopf cylinder") {
    CurvatureProfile k = CurvatureProfile::circle(0.5);
    k.quasi = {{0.2, 1.0}, {0.15, std::sqrt(2.0)}};
    CylinderOptions opt;
    opt.lambda = 0.0;
    opt.U = 5;
    opt.nu = 501;
    opt.nv = 129;
    CylinderBuild b = build_perturbed_cylinder(k, 2, opt);
    for (int i = b.surface.valid.ilo; i <= b.surface.valid.ihi; i += 17)
        for (int j = 0; j < opt.nv; j += 9) CHECK(std::abs(b.surface.f(i, j).norm() - 1) < 1e-12);
    CHECK(b.report.at("f_max").get<double>() == doctest::Approx(1.0));
}
