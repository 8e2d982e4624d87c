#include "perfhom/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace perfhom;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("domain box basics") {
    Domain d = Domain::box(2, vec3(0.0, 0.0), vec3(2.0, 3.0));
    CHECK(d.volume() == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(d.edge(1) == doctest::Approx(3.0));
    CHECK(d.contains(vec3(1.0, 1.0)));
    CHECK(!d.contains(vec3(2.0, 1.0)));  // boundary of the open box
    CHECK(d.dist(vec3(1.0, 1.0)) == doctest::Approx(0.0));
    CHECK(d.dist(vec3(3.0, 1.0)) == doctest::Approx(1.0));
    CHECK(d.dist(vec3(3.0, 4.0)) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(Domain::box(2, vec3(0.0, 0.0), vec3(0.0, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(Domain::box(4, vec3(0.0, 0.0), vec3(1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("unit sphere areas") {
    CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * kPi).epsilon(1e-15));
    CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * kPi).epsilon(1e-15));
    CHECK(unit_sphere_area(4) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-15));
    CHECK_THROWS_AS(unit_sphere_area(1), std::invalid_argument);
}

TEST_CASE("shell normalization constant") {
    // eps^{n - gamma(n-2)} = 0.1 for n = 3, gamma = 2  =>  c = 1/(1 - 0.1)
    CHECK(c_eps(0.1, 3, 2.0) == doctest::Approx(10.0 / 9.0).epsilon(1e-14));
    CHECK(c_eps(0.1, 4, 1.5) == doctest::Approx(10.0 / 9.0).epsilon(1e-14));
    CHECK(c_eps(1e-3, 3, 2.0) == doctest::Approx(1.0).epsilon(1e-2));
    CHECK_THROWS_AS(c_eps(0.0, 3, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(c_eps(1.0, 3, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(c_eps(0.1, 3, 3.0), std::invalid_argument);  // gamma >= n/(n-2)
    CHECK_THROWS_AS(c_eps(0.1, 3, 1.0), std::invalid_argument);
}

TEST_CASE("limit reaction density") {
    CHECK(mu0_prediction(1.0, 3) == doctest::Approx(4.0 * kPi).epsilon(1e-15));
    CHECK(mu0_prediction(2.0, 3) == doctest::Approx(8.0 * kPi).epsilon(1e-15));
    CHECK(mu0_prediction(1.0, 4) == doctest::Approx(2.0 * 2.0 * kPi * kPi).epsilon(1e-15));
}

TEST_CASE("perforation lattice radii") {
    PerforationLattice lat = PerforationLattice::cubic(0.1, 3, 2.0);
    CHECK(lat.r_hole == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(lat.r_outer == doctest::Approx(1e-2).epsilon(1e-12));
    CHECK_THROWS_AS(PerforationLattice::cubic(0.1, 3, 5.0), std::invalid_argument);
}

TEST_CASE("lattice centers: filter and count") {
    PerforationLattice lat = PerforationLattice::cubic(0.25, 3, 2.0);
    Domain dom = Domain::box(3, vec3(0, 0, 0), vec3(1, 1, 1));
    auto centers = lattice_centers(lat, dom);
    CHECK(centers.size() == 125);  // 5 per axis: 0, .25, .5, .75, 1
    CHECK(lattice_center_count(lat, dom) == centers.size());
    // lexicographic enumeration is deterministic
    auto again = lattice_centers(lat, dom);
    REQUIRE(again.size() == centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        CHECK(again[i][0] == centers[i][0]);
        CHECK(again[i][1] == centers[i][1]);
        CHECK(again[i][2] == centers[i][2]);
    }
    // 2D box
    PerforationLattice lat2 = PerforationLattice::cubic(0.5, 3, 2.0);
    Domain dom2 = Domain::box(3, vec3(0, 0, 0), vec3(2, 2, 2));
    CHECK(lattice_center_count(lat2, dom2) == 125);  // 5^3 again at eps = 1/2 on (0,2)^3
}

TEST_CASE("symmetric matrices") {
    SymMat I = SymMat::identity(3, 2.0);
    CHECK(I.quad(vec3(1, 1, 1)) == doctest::Approx(6.0));
    CHECK(!I.has_cross_terms());
    SymMat D = SymMat::diag(2, vec3(1.6, 2.5));
    CHECK(D.quad(vec3(1, 1)) == doctest::Approx(4.1));
    SymMat C = D;
    C.m[0][1] = C.m[1][0] = 0.3;
    CHECK(C.has_cross_terms());
    CHECK(C.quad(vec3(1, 1)) == doctest::Approx(4.7));
}

TEST_CASE("coefficient fields") {
    SUBCASE("constant") {
        CoefficientField A = CoefficientField::constant(SymMat::identity(2, 3.0), 3.0, 3.0);
        CHECK(A.eval(vec3(0.4, 0.4)).m[0][0] == doctest::Approx(3.0));
        CHECK(A.eval_scalar(vec3(0.4, 0.4)) == doctest::Approx(3.0));
        CHECK(A.isotropic());
    }
    SUBCASE("two phase") {
        PerforationLattice lat = PerforationLattice::cubic(0.5, 3, 2.0);
        CoefficientField A = CoefficientField::two_phase(1.0, 2.0, lat, 1.0, 2.0);
        // r_outer = 0.25; point near a center is in the shell
        CHECK(A.eval_scalar(vec3(0.5, 0.5, 0.6)) == doctest::Approx(2.0));
        CHECK(A.eval_scalar(vec3(0.25, 0.25, 0.25)) == doctest::Approx(1.0));
        CHECK(A.isotropic());
    }
    SUBCASE("laminate and its limit") {
        std::vector<std::pair<double, double>> prof{{0.5, 1.0}, {0.5, 4.0}};
        CoefficientField A = CoefficientField::laminate(2, 0, 0.25, prof, 1.0, 4.0);
        CHECK(A.eval_scalar(vec3(0.05, 0.9)) == doctest::Approx(1.0));   // first band
        CHECK(A.eval_scalar(vec3(0.15, 0.9)) == doctest::Approx(4.0));   // second band
        SymMat H = laminate_h_limit(2, 0, prof);
        CHECK(H.m[0][0] == doctest::Approx(1.6).epsilon(1e-15));  // harmonic mean
        CHECK(H.m[1][1] == doctest::Approx(2.5).epsilon(1e-15));  // arithmetic mean
        CHECK_THROWS_AS(CoefficientField::laminate(2, 0, 0.25,
                                                   std::vector<std::pair<double, double>>{
                                                       {0.5, 1.0}, {0.4, 4.0}},
                                                   1.0, 4.0),
                        std::invalid_argument);
    }
    SUBCASE("extended beyond a core box") {
        std::vector<std::pair<double, double>> prof{{0.5, 1.0}, {0.5, 4.0}};
        CoefficientField A = CoefficientField::laminate(2, 0, 0.25, prof, 1.0, 4.0);
        Domain core = Domain::box(2, vec3(0, 0), vec3(1, 1));
        CoefficientField E = CoefficientField::extended(A, core, 1.0);
        CHECK(E.has_core());
        CHECK(E.eval_scalar(vec3(0.15, 0.9)) == doctest::Approx(4.0));
        CHECK(E.eval_scalar(vec3(1.5, 0.5)) == doctest::Approx(1.0));  // outside the core
        CHECK(E.eval(vec3(-0.2, 0.5)).m[1][1] == doctest::Approx(1.0));
        CHECK_THROWS_AS(CoefficientField::extended(A, core, 0.5), std::invalid_argument);
        CoefficientField aniso =
            CoefficientField::constant(SymMat::diag(2, vec3(1.0, 2.0)), 1.0, 2.0);
        CHECK_THROWS_AS(CoefficientField::extended(aniso, core, 1.0), std::invalid_argument);
    }
}
