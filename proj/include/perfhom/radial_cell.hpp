#pragma once

#include "perfhom/mesh.hpp"

#include <functional>
#include <span>

namespace perfhom {

// One perforation cell: the radial capacity profile that vanishes on the
// hole, reaches 1 on the outer shell radius, and tends to c_eps far away.
struct RadialCell {
    double eps = 0.0;
    int n = 0;
    double gamma = 0.0;
    Vec3 center{};
    double c = 0.0;  // normalization c_eps(eps, n, gamma)

    static RadialCell make(double eps, int n, double gamma, const Vec3& center = Vec3{});

    double r_hole() const;
    double r_outer() const;
};

// Radial profile at distance r from the center: 0 inside the hole, else
// c * (1 - eps^n r^{2-n}) (exactly 1 at r_outer; not clamped beyond it).
double shell_value(const RadialCell& cell, double r);
double shell_value(const RadialCell& cell, const Vec3& x);

// Glued nodal field over the whole lattice: 0 on holes, radial profile on
// shells, 1 outside every outer ball.
NodalField shell_field(const PerforationLattice& lat, const MeshPtr& mesh);

// Dirichlet energy of one cell profile over its shell:
// (n-2) * unit_sphere_area(n) * c_eps * eps^n.
double cell_energy_closed_form(double eps, int n, double gamma);

// Composite-Simpson radial quadrature of the same energy over
// [r0, r1] (defaults to the full shell). radial_points >= 16.
double radial_energy_integral(const RadialCell& cell, double r0, double r1, int radial_points);
double cell_energy_quadrature(const RadialCell& cell, int radial_points);

// Analytic two-sided energy audit over a domain: lhs counts only cells whose
// outer ball lies fully inside, rhs is the closed-form bound over all
// filtered centers. lhs <= rhs always.
struct EnergyBound {
    double interior_lhs = 0.0;
    double rhs = 0.0;
    std::size_t n_centers = 0;
    std::size_t n_interior = 0;
};
EnergyBound energy_bound_check(const PerforationLattice& lat, const Domain& domain);

// Deterministic golden-angle point set on the unit sphere (3D).
std::vector<Vec3> fibonacci_sphere_points(int count);

// Pairing of phi with the rescaled boundary-layer surface measure
// b (n-2) c_eps eps^{n - gamma(n-1)} sigma_eps, quadrature by Fibonacci
// points on each outer sphere. clip drops quadrature points outside the
// domain. 3D only (general phi needs a sphere rule).
double sphere_measure_pairing(const PerforationLattice& lat, const Domain& domain,
                              const std::function<double(const Vec3&)>& phi, double b,
                              int sphere_points, bool clip = true);

// Exact value of the same pairing for phi = 1 without clipping, any n >= 3:
// b (n-2) unit_sphere_area(n) c_eps N_eps eps^n.
double sphere_measure_pairing_ones(const PerforationLattice& lat, const Domain& domain,
                                   double b);

// Deterministic pairwise (cascade) summation.
double pairwise_sum(std::span<const double> xs);

} // namespace perfhom
