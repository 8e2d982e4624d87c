#include "perfhom/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace perfhom {

NodalField solve_relaxed(const CoefficientField& A, const MeasureSpec& mu, const Load& load,
                         const MeshPtr& mesh, const SolverParams& params, SolveInfo* info) {
    SparseSystem sys = assemble(mesh, A, mu, load);
    return solve_system(sys, params, info);
}

NodalField solve_w(const CoefficientField& A, const MeasureSpec& mu, const MeshPtr& mesh,
                   const SolverParams& params, SolveInfo* info) {
    return solve_relaxed(A, mu, Load::uniform(mesh, 1.0), mesh, params, info);
}

PerforatedSolve solve_perforated_unit(const CoefficientField& A, const MeasureSpec& mu,
                                      const MeshPtr& mesh, const SolverParams& params) {
    if (mu.kind() != MeasureSpec::Kind::hole_dirichlet)
        throw std::invalid_argument("solve_perforated_unit: hole constraint measure required");
    SparseSystem sys = assemble(mesh, A, mu, Load::uniform(mesh, 1.0));
    PerforatedSolve out;
    out.w = solve_system(sys, params, &out.info);
    if (!out.info.converged)
        throw std::runtime_error("solve_perforated_unit: solver did not converge");
    NodalField r = reaction_forces(sys, out.w);
    out.nu = NodalField(mesh);
    for (std::size_t i = 0; i < r.size(); ++i)
        if (mesh->node_class[i] == NodeClass::hole_interior) out.nu[i] = r[i];
    return out;
}

NodalField reaction_measure(const CoefficientField& A, const MeasureSpec& mu,
                            const MeshPtr& mesh, const SolverParams& params) {
    return solve_perforated_unit(A, mu, mesh, params).nu;
}

// ---------------------------------------------------------------------------

MeshPtr build_enlarged_mesh(const Domain& domain, double h, int margin_cells) {
    if (margin_cells < 1)
        throw std::invalid_argument("build_enlarged_mesh: margin_cells >= 1 required");
    Vec3 lo = domain.lower, hi = domain.upper;
    for (int k = 0; k < domain.dim; ++k) {
        lo[k] -= margin_cells * h;
        hi[k] += margin_cells * h;
    }
    return build_mesh(Domain::box(domain.dim, lo, hi), h);
}

CorrectorZ solve_corrector_z(const CoefficientField& A_eps, const CoefficientField& A0,
                             int j, const MeshPtr& mesh, const Domain& core,
                             const SolverParams& params) {
    const Mesh& m = *mesh;
    if (j < 0 || j >= m.dim) throw std::invalid_argument("solve_corrector_z: bad axis");
    if (A_eps.dim() != m.dim || A0.dim() != m.dim)
        throw std::invalid_argument("solve_corrector_z: dimension mismatch");

    SparseSystem sys = assemble(mesh, A_eps, MeasureSpec::zero(), Load::uniform(mesh, 0.0));
    sys.rhs = flux_load(mesh, [&](const Vec3& x) {
        SymMat a0 = A0.eval(x), ae = A_eps.eval(x);
        Vec3 q{};
        for (int k = 0; k < m.dim; ++k) q[k] = a0.m[k][j] - ae.m[k][j];
        return q;
    });

    CorrectorZ out;
    out.z = solve_system(sys, params, &out.info);

    for (std::size_t i = 0; i < out.z.size(); ++i)
        if (core.dist(m.node_coord(i)) <= 1e-12)
            out.sup_norm = std::max(out.sup_norm, std::abs(out.z[i]));

    CoefficientField ident =
        CoefficientField::constant(SymMat::identity(m.dim), 1.0, 1.0);
    out.h1_seminorm = std::sqrt(std::max(0.0, energy_seminorm(out.z, ident, core)));

    // flux entry via the exact-gradient field x_j: int A Dz.e_j + int A e_j.e_j
    NodalField xj = NodalField::from_function(mesh, [&](const Vec3& x) { return x[j]; });
    out.flux_entry = (energy_inner(out.z, xj, A_eps, core) +
                      energy_inner(xj, xj, A_eps, core)) /
                     core.volume();
    return out;
}

NodalField resample(const NodalField& src, const MeshPtr& mesh) {
    NodalField out(mesh);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = src.sample(mesh->node_coord(i));
    return out;
}

NodalField build_corrector(const NodalField& psi, const CorrectorSet& correctors,
                           const NodalField& omega_eps) {
    if (psi.mesh.get() != omega_eps.mesh.get())
        throw std::invalid_argument("build_corrector: fields on different meshes");
    const int dim = psi.mesh->dim;
    if (!correctors.z.empty() && int(correctors.z.size()) != dim)
        throw std::invalid_argument("build_corrector: need one z per axis (or none)");
    for (const NodalField& zj : correctors.z)
        if (zj.mesh.get() != psi.mesh.get())
            throw std::invalid_argument("build_corrector: fields on different meshes");

    NodalField v(psi.mesh);
    if (correctors.z.empty()) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = psi[i] * omega_eps[i];
        return v;
    }
    auto grad = nodal_gradient(psi);
    for (std::size_t i = 0; i < v.size(); ++i) {
        double s = psi[i];
        for (int j = 0; j < dim; ++j) s += grad[j][i] * correctors.z[j][i];
        v[i] = s * omega_eps[i];
    }
    return v;
}

// 1D running mean of half-width hw along one axis, truncated and renormalized
// at the ends; applied in place.
static void box_pass(const Mesh& m, std::vector<double>& vals, int axis, int hw) {
    const int n = m.nodes[axis];
    if (n < 2 || hw < 1) return;
    std::vector<double> line(n), pref(n + 1);
    int outer1, outer2;
    // the two remaining axes
    int o1 = (axis == 0) ? 1 : 0;
    int o2 = (axis == 2) ? 1 : 2;
    outer1 = m.nodes[o1];
    outer2 = m.nodes[o2];
    auto at = [&](int ia, int i1, int i2) -> std::size_t {
        int ixyz[3];
        ixyz[axis] = ia;
        ixyz[o1] = i1;
        ixyz[o2] = i2;
        return m.node_index(ixyz[0], ixyz[1], ixyz[2]);
    };
    for (int i2 = 0; i2 < outer2; ++i2)
        for (int i1 = 0; i1 < outer1; ++i1) {
            for (int ia = 0; ia < n; ++ia) line[ia] = vals[at(ia, i1, i2)];
            pref[0] = 0.0;
            for (int ia = 0; ia < n; ++ia) pref[ia + 1] = pref[ia] + line[ia];
            for (int ia = 0; ia < n; ++ia) {
                int lo = std::max(0, ia - hw), hi = std::min(n - 1, ia + hw);
                vals[at(ia, i1, i2)] = (pref[hi + 1] - pref[lo]) / double(hi - lo + 1);
            }
        }
}

NodalField choose_smooth_profile(const NodalField& u0, const NodalField& omega0,
                                 double theta, double radius) {
    if (u0.mesh.get() != omega0.mesh.get())
        throw std::invalid_argument("choose_smooth_profile: fields on different meshes");
    if (!(theta > 0.0)) throw std::invalid_argument("choose_smooth_profile: theta > 0");
    if (radius < 0.0) throw std::invalid_argument("choose_smooth_profile: radius >= 0");
    const Mesh& m = *u0.mesh;
    NodalField psi(u0.mesh);
    for (std::size_t i = 0; i < psi.size(); ++i)
        psi[i] = u0[i] / std::max(omega0[i], theta);
    int hw = int(std::lround(radius / m.h));
    for (int axis = 0; axis < m.dim; ++axis) box_pass(m, psi.values, axis, hw);
    return psi;
}

double profile_defect(const NodalField& psi, const NodalField& u0, const NodalField& omega0,
                      double beta, const MeasureSpec& mu0) {
    if (psi.mesh.get() != u0.mesh.get() || omega0.mesh.get() != u0.mesh.get())
        throw std::invalid_argument("profile_defect: fields on different meshes");
    NodalField d(u0.mesh);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = u0[i] - psi[i] * omega0[i];
    CoefficientField ident =
        CoefficientField::constant(SymMat::identity(u0.mesh->dim), 1.0, 1.0);
    return beta * energy_seminorm(d, ident) + weighted_mass(d, d, mu0);
}

std::pair<double, double> corrector_error(const NodalField& u_eps, const NodalField& v,
                                          const CoefficientField& A_eps,
                                          const MeasureSpec& mu_eps,
                                          const std::optional<Domain>& subbox) {
    if (u_eps.mesh.get() != v.mesh.get())
        throw std::invalid_argument("corrector_error: fields on different meshes");
    const Mesh& m = *u_eps.mesh;
    NodalField d(u_eps.mesh);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = u_eps[i] - v[i];

    CoefficientField ident = CoefficientField::constant(SymMat::identity(m.dim), 1.0, 1.0);
    double energy = A_eps.alpha() * energy_seminorm(d, ident, subbox);

    const bool holes = (mu_eps.kind() == MeasureSpec::Kind::hole_dirichlet);
    double mass = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (subbox && subbox->dist(m.node_coord(i)) > 1e-12) continue;
        double w = holes ? (m.node_class[i] == NodeClass::hole_interior ? m.lumped_mass(i)
                                                                        : 0.0)
                         : mu_eps.node_weight(m, i);
        if (w != 0.0) mass += d[i] * d[i] * w;
    }
    return {energy, mass};
}

// ---------------------------------------------------------------------------

NodalField StrangeTermEstimate::to_field() const {
    const Mesh& m = *reference_w.mesh;
    NodalField out(reference_w.mesh);
    for (std::size_t i = 0; i < out.size(); ++i) {
        Vec3 x = m.node_coord(i);
        int wi[3] = {0, 0, 0};
        for (int k = 0; k < m.dim; ++k)
            wi[k] = std::min(wcells[k] - 1,
                             int((x[k] - m.domain.lower[k]) / wsize[k]));
        out[i] = mu_hat[window_index(wi[0], wi[1], wi[2])];
    }
    return out;
}

StrangeTermEstimate extract_strange_term(const NodalField& nu, const NodalField& w,
                                         double eps, double window, double floor_value) {
    if (nu.mesh.get() != w.mesh.get())
        throw std::invalid_argument("extract_strange_term: fields on different meshes");
    if (!(eps > 0.0)) throw std::invalid_argument("extract_strange_term: eps > 0");
    if (!(floor_value > 0.0)) throw std::invalid_argument("extract_strange_term: floor > 0");
    if (window < eps)
        throw std::invalid_argument("extract_strange_term: window below eps is unstable");
    const Mesh& m = *nu.mesh;

    StrangeTermEstimate est;
    est.eps = eps;
    est.window = window;
    est.window_flagged = (window < 2.0 * eps);
    est.reference_w = w;
    for (int k = 0; k < m.dim; ++k) {
        est.wcells[k] = std::max(1, int(std::lround(m.domain.edge(k) / window)));
        est.wsize[k] = m.domain.edge(k) / est.wcells[k];
    }
    const std::size_t nw = std::size_t(est.wcells[0]) * est.wcells[1] * est.wcells[2];
    est.mu_hat.assign(nw, 0.0);
    est.saturated.assign(nw, 0);
    est.nu_sum.assign(nw, 0.0);
    est.w_mean.assign(nw, 0.0);
    std::vector<double> lump_sum(nw, 0.0), w_lump(nw, 0.0);

    for (std::size_t i = 0; i < nu.size(); ++i) {
        Vec3 x = m.node_coord(i);
        int wi[3] = {0, 0, 0};
        for (int k = 0; k < m.dim; ++k)
            wi[k] = std::min(est.wcells[k] - 1,
                             int((x[k] - m.domain.lower[k]) / est.wsize[k]));
        std::size_t idx = est.window_index(wi[0], wi[1], wi[2]);
        double lump = m.lumped_mass(i);
        est.nu_sum[idx] += nu[i];
        w_lump[idx] += w[i] * lump;
        lump_sum[idx] += lump;
    }

    double vol = 1.0;
    for (int k = 0; k < m.dim; ++k) vol *= est.wsize[k];
    for (std::size_t idx = 0; idx < nw; ++idx) {
        est.w_mean[idx] = (lump_sum[idx] > 0.0) ? w_lump[idx] / lump_sum[idx] : 0.0;
        est.saturated[idx] = (est.w_mean[idx] < floor_value) ? 1 : 0;
        est.mu_hat[idx] = est.nu_sum[idx] / (vol * std::max(est.w_mean[idx], floor_value));
        est.total_mass += est.mu_hat[idx] * vol;
    }

    // interior statistics: one window layer off the boundary when possible
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    bool have_interior = true;
    for (int k = 0; k < 3; ++k) hi[k] = est.wcells[k] - 1;
    for (int k = 0; k < m.dim; ++k) {
        if (est.wcells[k] >= 3) {
            lo[k] = 1;
            hi[k] = est.wcells[k] - 2;
        } else {
            have_interior = false;
        }
    }
    if (!have_interior) {
        for (int k = 0; k < 3; ++k) {
            lo[k] = 0;
            hi[k] = est.wcells[k] - 1;
        }
        est.interior_includes_boundary = true;
    }
    std::vector<double> vals;
    for (int wz = lo[2]; wz <= hi[2]; ++wz)
        for (int wy = lo[1]; wy <= hi[1]; ++wy)
            for (int wx = lo[0]; wx <= hi[0]; ++wx) {
                std::size_t idx = est.window_index(wx, wy, wz);
                if (est.saturated[idx]) continue;
                vals.push_back(est.mu_hat[idx]);
            }
    est.interior_count = static_cast<int>(vals.size());
    if (!vals.empty()) {
        double sum = 0.0;
        for (double v : vals) sum += v;
        est.interior_mean = sum / vals.size();
        double var = 0.0;  // shifted second pass: exact zero for equal windows
        for (double v : vals) {
            double d = v - est.interior_mean;
            var += d * d;
        }
        est.interior_std = std::sqrt(var / vals.size());
    }
    return est;
}

// ---------------------------------------------------------------------------

ComparisonReport comparison_bounds_check(std::span<const double> mu1,
                                         std::span<const double> mu2, double alpha,
                                         double beta, double tol) {
    if (mu1.size() != mu2.size())
        throw std::invalid_argument("comparison_bounds_check: size mismatch");
    if (!(alpha > 0.0 && beta >= alpha))
        throw std::invalid_argument("comparison_bounds_check: need 0 < alpha <= beta");
    if (tol < 0.0) throw std::invalid_argument("comparison_bounds_check: tol >= 0");
    const double lo_f = (alpha * alpha) / (beta * beta);
    const double hi_f = (beta * beta) / (alpha * alpha);
    const double inf = std::numeric_limits<double>::infinity();

    ComparisonReport rep;
    rep.n_checked = mu1.size();
    for (std::size_t i = 0; i < mu1.size(); ++i) {
        double m1 = std::max(mu1[i], 0.0), m2 = std::max(mu2[i], 0.0);
        double lo = lo_f * m2, hi = hi_f * m2;
        double r_lo = (lo == 0.0) ? 0.0 : (m1 == 0.0 ? inf : lo / m1);
        double r_hi = (m1 == 0.0) ? 0.0 : (hi == 0.0 ? inf : m1 / hi);
        double ratio = std::max(r_lo, r_hi);
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (ratio > 1.0 + tol) ++rep.n_failed;
    }
    rep.pass = (rep.n_failed == 0);
    return rep;
}

ComparisonReport comparison_bounds_check(double mu1, double mu2, double alpha, double beta,
                                         double tol) {
    return comparison_bounds_check(std::span<const double>(&mu1, 1),
                                   std::span<const double>(&mu2, 1), alpha, beta, tol);
}

std::vector<HProbeRow> h_convergence_probe(
    const std::vector<std::pair<double, CoefficientField>>& A_seq,
    const CoefficientField& A0, const Load& f, const MeshPtr& mesh,
    const std::function<double(const Vec3&)>& phi, const SolverParams& params) {
    NodalField u0 = solve_relaxed(A0, MeasureSpec::zero(), f, mesh, params);
    NodalField phi_h = NodalField::from_function(mesh, phi);
    const double flux0 = energy_inner(u0, phi_h, A0);

    std::vector<HProbeRow> rows;
    rows.reserve(A_seq.size());
    for (const auto& [eps, A_eps] : A_seq) {
        NodalField u = solve_relaxed(A_eps, MeasureSpec::zero(), f, mesh, params);
        NodalField d(mesh);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] - u0[i];
        HProbeRow row;
        row.eps = eps;
        row.l2_gap = lumped_l2_norm(d);
        row.flux_gap = std::abs(energy_inner(u, phi_h, A_eps) - flux0);
        rows.push_back(row);
    }
    return rows;
}

} // namespace perfhom
