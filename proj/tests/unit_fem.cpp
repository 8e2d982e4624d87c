#include "perfhom/assembly.hpp"
#include "perfhom/homogenize.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace perfhom;

namespace {

MeshPtr unit_square(int m) {
    return build_mesh(Domain::box(2, vec3(0, 0), vec3(1, 1)), 1.0 / m);
}
MeshPtr unit_cube(int m) {
    return build_mesh(Domain::box(3, vec3(0, 0, 0), vec3(1, 1, 1)), 1.0 / m);
}
SolverParams tight() {
    SolverParams p;
    p.rel_tol = 1e-12;
    return p;
}

} // namespace

TEST_CASE("mesh geometry and lumped masses") {
    MeshPtr mesh = unit_square(5);
    CHECK(mesh->node_count() == 36);
    CHECK(mesh->cell_count() == 25);
    Vec3 x = mesh->node_coord(mesh->node_index(5, 5, 0));
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
    double total = 0.0;
    for (std::size_t i = 0; i < mesh->node_count(); ++i) total += mesh->lumped_mass(i);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));

    MeshPtr cube = unit_cube(4);
    double total3 = 0.0;
    for (std::size_t i = 0; i < cube->node_count(); ++i) total3 += cube->lumped_mass(i);
    CHECK(total3 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(cube->lumped_mass(0) == doctest::Approx(std::pow(0.25, 3) / 8).epsilon(1e-13));
}

TEST_CASE("node classification around balls") {
    MeshPtr mesh = unit_cube(16);
    Vec3 c = vec3(0.5, 0.5, 0.5);
    MeshPtr tagged = classify_balls(mesh, std::span<const Vec3>(&c, 1), 0.15);
    std::size_t inside = count_class(*tagged, NodeClass::hole_interior);
    std::size_t ring = count_class(*tagged, NodeClass::hole_boundary);
    CHECK(inside > 0);
    CHECK(ring > 0);
    CHECK(!tagged->hole_resolution_warning);
    // center node is tagged, corner is not
    CHECK(tagged->node_class[tagged->node_index(8, 8, 8)] == NodeClass::hole_interior);
    CHECK(tagged->node_class[tagged->node_index(1, 1, 1)] == NodeClass::interior);
    MeshPtr warned = classify_balls(mesh, std::span<const Vec3>(&c, 1), 0.01);
    CHECK(warned->hole_resolution_warning);
}

TEST_CASE("single interior node solves exactly") {
    SolverParams params = tight();
    SUBCASE("2d: u = h^2/4") {
        MeshPtr mesh = unit_square(2);
        CoefficientField A = CoefficientField::constant(SymMat::identity(2), 1.0, 1.0);
        NodalField u = solve_relaxed(A, MeasureSpec::zero(), Load::uniform(mesh, 1.0), mesh,
                                     params);
        CHECK(u[mesh->node_index(1, 1, 0)] == doctest::Approx(1.0 / 16).epsilon(1e-13));
    }
    SUBCASE("3d: u = h^2/6") {
        MeshPtr mesh = unit_cube(2);
        CoefficientField A = CoefficientField::constant(SymMat::identity(3), 1.0, 1.0);
        NodalField u = solve_relaxed(A, MeasureSpec::zero(), Load::uniform(mesh, 1.0), mesh,
                                     params);
        CHECK(u[mesh->node_index(1, 1, 1)] == doctest::Approx(1.0 / 24).epsilon(1e-13));
    }
}

TEST_CASE("torsion value at the center of the unit square") {
    MeshPtr mesh = unit_square(64);
    CoefficientField A = CoefficientField::constant(SymMat::identity(2), 1.0, 1.0);
    NodalField u = solve_relaxed(A, MeasureSpec::zero(), Load::uniform(mesh, 1.0), mesh,
                                 tight());
    double center = u[mesh->node_index(32, 32, 0)];
    CHECK(center == doctest::Approx(0.0736713533).epsilon(3e-3));
    CHECK(std::abs(center - 0.0736713533) < 2e-4);
}

TEST_CASE("stiffness matrix is an M-matrix with zero row sums") {
    MeshPtr mesh = unit_square(16);
    CoefficientField A = CoefficientField::constant(SymMat::identity(2, 2.0), 2.0, 2.0);
    SparseSystem sys = assemble(mesh, A, MeasureSpec::zero(), Load::uniform(mesh, 0.0));
    const CsrMatrix& K = sys.matrix;
    for (std::size_t i = 0; i < K.n; ++i) {
        double row_sum = 0.0;
        for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p) {
            row_sum += K.vals[p];
            if (K.cols[p] != i) CHECK(K.vals[p] <= 1e-14);
            else CHECK(K.vals[p] > 0.0);
        }
        CHECK(std::abs(row_sum) <= 1e-12);
    }
}

TEST_CASE("flux load of a constant field matches the stiffness action") {
    MeshPtr mesh = unit_square(8);
    CoefficientField A = CoefficientField::constant(SymMat::identity(2), 1.0, 1.0);
    SparseSystem sys = assemble(mesh, A, MeasureSpec::zero(), Load::uniform(mesh, 0.0));
    NodalField x0 = NodalField::from_function(mesh, [](const Vec3& x) { return x[0]; });
    std::vector<double> kx(mesh->node_count());
    sys.matrix.mul(x0.values, kx);
    std::vector<double> l = flux_load(mesh, [](const Vec3&) { return vec3(1.0, 0.0); });
    REQUIRE(l.size() == kx.size());
    double total = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        CHECK(std::abs(l[i] - kx[i]) <= 1e-12);
        total += l[i];
    }
    CHECK(std::abs(total) <= 1e-12);  // divergence-free pairing with the partition of unity
}

TEST_CASE("energy forms are exact on linear fields") {
    MeshPtr mesh = unit_square(10);
    CoefficientField A =
        CoefficientField::constant(SymMat::diag(2, vec3(2.0, 3.0)), 2.0, 3.0);
    NodalField u = NodalField::from_function(
        mesh, [](const Vec3& x) { return 2.0 * x[0] + 3.0 * x[1] - 1.0; });
    // Du = (2,3): energy = 2*4 + 3*9 = 35 over the unit square
    CHECK(energy_seminorm(u, A) == doctest::Approx(35.0).epsilon(1e-13));
    Domain half = Domain::box(2, vec3(0, 0), vec3(0.5, 1.0));
    CHECK(energy_seminorm(u, A, half) == doctest::Approx(17.5).epsilon(1e-13));
    NodalField v = NodalField::from_function(mesh, [](const Vec3& x) { return x[0]; });
    // polarization: int A Du . Dv = 2*2*1 = 4
    CHECK(energy_inner(u, v, A) == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(energy_inner(v, u, A) == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("weighted mass is the lumped pairing") {
    MeshPtr mesh = unit_square(7);
    NodalField ones(mesh, 1.0);
    CHECK(weighted_mass(ones, ones, MeasureSpec::constant_density(4.0)) ==
          doctest::Approx(4.0).epsilon(1e-13));
    CHECK(weighted_mass(ones, ones, MeasureSpec::zero()) == doctest::Approx(0.0));
    CHECK_THROWS_AS(weighted_mass(ones, ones, MeasureSpec::hole_dirichlet()),
                    std::logic_error);
}

TEST_CASE("interpolation and gradients reproduce linears") {
    MeshPtr mesh = unit_square(9);
    auto lin = [](const Vec3& x) { return 0.5 * x[0] - 2.0 * x[1] + 0.25; };
    NodalField u = NodalField::from_function(mesh, lin);
    CHECK(u.sample(vec3(0.314, 0.7253)) == doctest::Approx(lin(vec3(0.314, 0.7253))).epsilon(1e-13));
    CHECK(u.sample(vec3(1.7, 0.5)) == doctest::Approx(lin(vec3(1.0, 0.5))).epsilon(1e-13));  // clamped
    Vec3 g = cell_gradient(u, 4, 4, 0);
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(-2.0).epsilon(1e-12));
    auto grads = nodal_gradient(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(grads[0][i] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(grads[1][i] == doctest::Approx(-2.0).epsilon(1e-12));
    }
    auto [h1, l2] = h1_l2_errors(u, lin, [](const Vec3&) { return vec3(0.5, -2.0); });
    CHECK(h1 <= 1e-12);
    CHECK(l2 <= 1e-12);
}

TEST_CASE("manufactured solution at one resolution") {
    MeshPtr mesh = unit_square(32);
    constexpr double pi = 3.14159265358979323846;
    auto exact = [&](const Vec3& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    CoefficientField A = CoefficientField::constant(SymMat::identity(2), 1.0, 1.0);
    NodalField f = NodalField::from_function(
        mesh, [&](const Vec3& x) { return (2.0 * pi * pi + 4.0) * exact(x); });
    NodalField u = solve_relaxed(A, MeasureSpec::constant_density(4.0), Load::of(std::move(f)),
                                 mesh, tight());
    auto [h1, l2] = h1_l2_errors(u, exact, [&](const Vec3& x) {
        return vec3(pi * std::cos(pi * x[0]) * std::sin(pi * x[1]),
                    pi * std::sin(pi * x[0]) * std::cos(pi * x[1]));
    });
    CHECK(l2 < 3e-3);
    CHECK(h1 < 0.2);
}

TEST_CASE("reaction forces reject non-solutions") {
    MeshPtr mesh = unit_square(8);
    CoefficientField A = CoefficientField::constant(SymMat::identity(2), 1.0, 1.0);
    SparseSystem sys = assemble(mesh, A, MeasureSpec::zero(), Load::uniform(mesh, 1.0));
    NodalField u = solve_system(sys, tight());
    NodalField r = reaction_forces(sys, u);  // must not throw
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) total += r[i];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));  // total reaction = total load
    NodalField bad = u;
    bad[mesh->node_index(4, 4, 0)] += 0.1;
    CHECK_THROWS_AS(reaction_forces(sys, bad), std::runtime_error);
}

TEST_CASE("pcg behavior") {
    MeshPtr mesh = unit_square(32);
    CoefficientField A = CoefficientField::constant(SymMat::identity(2), 1.0, 1.0);
    SparseSystem sys = assemble(mesh, A, MeasureSpec::zero(), Load::uniform(mesh, 1.0));
    SUBCASE("non-convergence is reported, or thrown without an info sink") {
        SolverParams hard;
        hard.rel_tol = 1e-14;
        hard.max_iter = 1;
        SolveInfo info;
        NodalField u = solve_system(sys, hard, &info);
        CHECK(!info.converged);
        CHECK(info.iterations == 1);
        CHECK_THROWS_AS(solve_system(sys, hard), std::runtime_error);
    }
    SUBCASE("preconditioner choices agree") {
        SolverParams pj = tight();
        SolverParams pn = tight();
        pn.precond = SolverParams::Precond::none;
        NodalField uj = solve_system(sys, pj);
        NodalField un = solve_system(sys, pn);
        CHECK(linf_diff(uj, un) <= 1e-9);
    }
    SUBCASE("reruns are bit-identical") {
        SparseSystem sys2 = assemble(mesh, A, MeasureSpec::zero(), Load::uniform(mesh, 1.0));
        REQUIRE(sys2.matrix.vals.size() == sys.matrix.vals.size());
        CHECK(std::memcmp(sys2.matrix.vals.data(), sys.matrix.vals.data(),
                          sys.matrix.vals.size() * sizeof(double)) == 0);
        NodalField u1 = solve_system(sys, tight());
        NodalField u2 = solve_system(sys2, tight());
        CHECK(std::memcmp(u1.values.data(), u2.values.data(),
                          u1.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("capacity potential via penalization sits in the analytic sandwich") {
    // u = 1 on a ball of radius 0.08 (driven by a penalized measure and g = 1),
    // u = 0 on the boundary of the box (-0.25, 0.25)^3: the Dirichlet energy is
    // the discrete condenser capacity, between the two ball-condenser bounds
    // 4*pi/(1/r - 1/R) for the inscribed and circumscribed R, plus mesh slack.
    Domain dom = Domain::box(3, vec3(-0.25, -0.25, -0.25), vec3(0.25, 0.25, 0.25));
    MeshPtr mesh = build_mesh(dom, 0.0125);
    Vec3 c = vec3(0.0, 0.0, 0.0);
    MeshPtr tagged = classify_balls(mesh, std::span<const Vec3>(&c, 1), 0.08);
    CoefficientField A = CoefficientField::constant(SymMat::identity(3), 1.0, 1.0);
    NodalField zero(tagged, 0.0), one(tagged, 1.0);
    SparseSystem sys = assemble(tagged, A, MeasureSpec::penalized(1e8),
                                Load::with_measure_density(zero, one));
    SolverParams params;
    params.rel_tol = 1e-10;
    NodalField u = solve_system(sys, params);
    double hole_min = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (tagged->node_class[i] == NodeClass::hole_interior)
            hole_min = std::min(hole_min, u[i]);
    CHECK(hole_min == doctest::Approx(1.0).epsilon(1e-4));
    double cap = energy_seminorm(u, A);
    CHECK(cap > 1.15);
    CHECK(cap < 1.65);
}
