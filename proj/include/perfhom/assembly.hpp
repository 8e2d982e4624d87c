#pragma once

#include "perfhom/measure.hpp"
#include "perfhom/sparse.hpp"

#include <functional>
#include <optional>

namespace perfhom {

// Assembled linear system: stiffness plus lumped measure mass, lumped load,
// and the free-dof mask. Constrained dofs (outer boundary always, hole
// interiors under hole_dirichlet) carry value 0; their rows stay assembled so
// residuals at constrained dofs are the reaction forces.
struct SparseSystem {
    MeshPtr mesh;
    CsrMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::uint8_t> free_mask;
};

// P1 elements on the Kuhn simplex subdivision of each grid cell, coefficient
// frozen at cell centers, measure and load lumped at nodes.
SparseSystem assemble(const MeshPtr& mesh, const CoefficientField& A, const MeasureSpec& mu,
                      const Load& load);

// Load vector l_i = integral of q(x) . grad(phi_i) with q frozen at cell
// centers (used for corrector right-hand sides).
std::vector<double> flux_load(const MeshPtr& mesh,
                              const std::function<Vec3(const Vec3&)>& q);

NodalField solve_system(const SparseSystem& sys, const SolverParams& params,
                        SolveInfo* info = nullptr);

// integral of (grad u)^T A (grad u), exact for the P1 interpolant with the
// cell-frozen coefficient; optional restriction to cells whose center lies in
// the sub-box.
double energy_seminorm(const NodalField& u, const CoefficientField& A,
                       const std::optional<Domain>& subbox = std::nullopt);

// Same quadratic form evaluated between two fields (polarization of
// energy_seminorm).
double energy_inner(const NodalField& u, const NodalField& v, const CoefficientField& A,
                    const std::optional<Domain>& subbox = std::nullopt);

// integral of u v d(mu), lumped. Rejects hole_dirichlet.
double weighted_mass(const NodalField& u, const NodalField& v, const MeasureSpec& mu);

// r = rhs - (matrix) u over all nodes. Free-dof entries must vanish up to
// check_tol * ||rhs||; throws otherwise (u is not a solution of sys).
NodalField reaction_forces(const SparseSystem& sys, const NodalField& u,
                           double check_tol = 1e-5);

// (H1-seminorm error, L2 error) of u against an exact solution, per-simplex
// quadrature of degree 2.
std::pair<double, double> h1_l2_errors(const NodalField& u,
                                       const std::function<double(const Vec3&)>& exact,
                                       const std::function<Vec3(const Vec3&)>& exact_grad);

} // namespace perfhom
