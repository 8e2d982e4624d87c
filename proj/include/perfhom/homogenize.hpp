#pragma once

#include "perfhom/assembly.hpp"

namespace perfhom {

// Discrete solution of the relaxed problem
//   int A Du.Dy dx + int u y dmu = int f y dx + int g y dmu
// with zero values on the outer boundary (and on hole nodes when mu is the
// hole constraint).
NodalField solve_relaxed(const CoefficientField& A, const MeasureSpec& mu, const Load& load,
                         const MeshPtr& mesh, const SolverParams& params,
                         SolveInfo* info = nullptr);

// Relaxed solve with unit right-hand side; nonnegative and dominated nodewise
// by the unconstrained torsion function.
NodalField solve_w(const CoefficientField& A, const MeasureSpec& mu, const MeshPtr& mesh,
                   const SolverParams& params, SolveInfo* info = nullptr);

// Unit-load solve together with its reaction measure: the residual
// rhs - K w restricted to hole-interior nodes. One assembly, one solve.
struct PerforatedSolve {
    NodalField w;
    NodalField nu;
    SolveInfo info;
};

PerforatedSolve solve_perforated_unit(const CoefficientField& A, const MeasureSpec& mu,
                                      const MeshPtr& mesh, const SolverParams& params);

// The reaction measure alone. Entries are >= 0 for the M-matrix coefficients
// used here and sum to at most the domain volume.
NodalField reaction_measure(const CoefficientField& A, const MeasureSpec& mu,
                            const MeshPtr& mesh, const SolverParams& params);

// ---------------------------------------------------------------------------
// Correctors

// Mesh on the box grown by margin_cells * h on every side of `domain`.
MeshPtr build_enlarged_mesh(const Domain& domain, double h, int margin_cells = 2);

struct CorrectorZ {
    NodalField z;              // on the enlarged mesh, zero on its boundary
    double sup_norm = 0.0;     // max |z| over nodes in the closed core box
    double h1_seminorm = 0.0;  // sqrt of the Dirichlet energy over the core box
    double flux_entry = 0.0;   // (1/|core|) int_core A_eps (Dz + e_j).e_j dx
    SolveInfo info;
};

// z_j on the enlarged mesh: stiffness from A_eps (pass a field extended
// beyond `core` via CoefficientField::extended), right-hand side
// int (A0 - A_eps) e_j . Dphi_i dx, zero boundary values.
CorrectorZ solve_corrector_z(const CoefficientField& A_eps, const CoefficientField& A0,
                             int j, const MeshPtr& mesh, const Domain& core,
                             const SolverParams& params);

// Corrector fields already resampled onto the working mesh; an empty list
// means all z_j vanish.
struct CorrectorSet {
    double eps = 0.0;
    std::vector<NodalField> z;
};

// Multilinear resampling of src onto a different mesh (clamped at the edge).
NodalField resample(const NodalField& src, const MeshPtr& mesh);

// v = (psi + sum_j Dj(psi) z_j) * omega nodewise; Dj(psi) is the cell-average
// gradient averaged to nodes.
NodalField build_corrector(const NodalField& psi, const CorrectorSet& correctors,
                           const NodalField& omega_eps);

// Smooth profile psi = box filter of u0 / max(omega0, theta). The filter is a
// tensor product of 1D running means of half-width round(radius/h) nodes,
// truncated and renormalized at the boundary (so constants are preserved).
NodalField choose_smooth_profile(const NodalField& u0, const NodalField& omega0,
                                 double theta, double radius);

// Defect beta * int |D(u0 - psi omega0)|^2 dx + int |u0 - psi omega0|^2 dmu0:
// the quantity the profile construction is asked to push below a target.
double profile_defect(const NodalField& psi, const NodalField& u0, const NodalField& omega0,
                      double beta, const MeasureSpec& mu0);

// (alpha * int |D(u-v)|^2 dx, int |u-v|^2 dmu). Under the hole constraint the
// second term is the lumped residual sum_{hole nodes} (u-v)^2 lump, which is
// exactly zero when both fields honor the constraint. Optional sub-box
// restricts the energy to cells centered inside it and the measure term to
// nodes inside it.
std::pair<double, double> corrector_error(const NodalField& u_eps, const NodalField& v,
                                          const CoefficientField& A_eps,
                                          const MeasureSpec& mu_eps,
                                          const std::optional<Domain>& subbox = std::nullopt);

// ---------------------------------------------------------------------------
// Strange-term extraction

// Coarse-grained reaction density on a window grid tiling the mesh box:
// mu_hat = (sum of nu over the window) / (window volume * max(mean w, floor)).
struct StrangeTermEstimate {
    double eps = 0.0;
    double window = 0.0;                  // requested window length
    std::array<int, 3> wcells{1, 1, 1};   // windows per axis (1 on unused axes)
    std::array<double, 3> wsize{0, 0, 0}; // realized window lengths
    std::vector<double> mu_hat;
    std::vector<std::uint8_t> saturated;  // mean w below floor: value is a lower bound
    std::vector<double> nu_sum;           // reaction mass per window
    std::vector<double> w_mean;           // lump-weighted mean of w per window
    double total_mass = 0.0;              // integral of mu_hat over the box
    double interior_mean = 0.0;           // over unsaturated windows one layer off the boundary
    double interior_std = 0.0;
    int interior_count = 0;
    bool interior_includes_boundary = false; // set when no fully interior window exists
    bool window_flagged = false;             // window below 2*eps: unstable estimate
    NodalField reference_w;

    std::size_t window_count() const { return mu_hat.size(); }
    std::size_t window_index(int wx, int wy, int wz) const {
        return (std::size_t(wz) * wcells[1] + wy) * wcells[0] + wx;
    }
    // Piecewise-constant nodal expansion on the reference mesh.
    NodalField to_field() const;
};

// nu and w from the same perforated solve. Throws when window < eps; flags
// (but still computes) estimates with window below 2*eps.
StrangeTermEstimate extract_strange_term(const NodalField& nu, const NodalField& w,
                                         double eps, double window, double floor_value);

// ---------------------------------------------------------------------------
// Comparison bounds and convergence probes

// Cellwise check of (alpha^2/beta^2) mu2 <= mu1 <= (beta^2/alpha^2) mu2 with
// multiplicative slack (1 + tol). Small negative densities are clamped to 0.
struct ComparisonReport {
    bool pass = true;
    std::size_t n_checked = 0;
    std::size_t n_failed = 0;
    double worst_ratio = 0.0;  // largest bound-violation factor; <= 1 means inside
};

ComparisonReport comparison_bounds_check(std::span<const double> mu1,
                                         std::span<const double> mu2, double alpha,
                                         double beta, double tol);
ComparisonReport comparison_bounds_check(double mu1, double mu2, double alpha, double beta,
                                         double tol);

// Fixed-mesh surrogates for H-convergence: for each (eps, A_eps) solve the
// plain Dirichlet problem and report the L2 gap to the A0 solution and the
// flux-pairing gap |int (A_eps Du_eps - A0 Du0).Dphi dx| for the given phi.
struct HProbeRow {
    double eps = 0.0;
    double l2_gap = 0.0;
    double flux_gap = 0.0;
};

std::vector<HProbeRow> h_convergence_probe(
    const std::vector<std::pair<double, CoefficientField>>& A_seq,
    const CoefficientField& A0, const Load& f, const MeshPtr& mesh,
    const std::function<double(const Vec3&)>& phi, const SolverParams& params);

} // namespace perfhom
