#include "perfhom/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace perfhom {

namespace {

struct Simplex {
    int corners[4];   // corner bitmasks of the containing cell
    Vec3 grad[4];     // barycentric gradients in unit-cube coordinates
};

// Kuhn subdivision of the reference cell: one simplex per axis permutation,
// corners along the monotone path 0 -> (1,..,1).
std::vector<Simplex> kuhn_simplices(int dim) {
    std::vector<int> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Simplex> out;
    do {
        Simplex s{};
        int mask = 0;
        s.corners[0] = 0;
        for (int j = 0; j < dim; ++j) {
            mask |= 1 << perm[j];
            s.corners[j + 1] = mask;
        }
        for (int k = 0; k < 3; ++k)
            for (int a = 0; a < 4; ++a) s.grad[a][k] = 0.0;
        s.grad[0][perm[0]] = -1.0;
        for (int j = 1; j < dim; ++j) {
            s.grad[j][perm[j - 1]] = 1.0;
            s.grad[j][perm[j]] = -1.0;
        }
        s.grad[dim][perm[dim - 1]] = 1.0;
        out.push_back(s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

struct Offset {
    int d[3];
};

// Stencil offsets reachable through Kuhn simplices: +-(axis units), and with
// cross terms also +-(indicators of axis subsets). Sorted by global index
// delta so CSR columns come out ascending.
std::vector<Offset> stencil_offsets(int dim, bool cross_terms) {
    std::vector<Offset> offs;
    offs.push_back({{0, 0, 0}});
    for (int k = 0; k < dim; ++k) {
        Offset p{{0, 0, 0}}, n{{0, 0, 0}};
        p.d[k] = 1;
        n.d[k] = -1;
        offs.push_back(p);
        offs.push_back(n);
    }
    if (cross_terms) {
        for (int mask = 1; mask < (1 << dim); ++mask) {
            if (__builtin_popcount(unsigned(mask)) < 2) continue;
            Offset p{{0, 0, 0}}, n{{0, 0, 0}};
            for (int k = 0; k < dim; ++k)
                if (mask & (1 << k)) {
                    p.d[k] = 1;
                    n.d[k] = -1;
                }
            offs.push_back(p);
            offs.push_back(n);
        }
    }
    std::sort(offs.begin(), offs.end(), [](const Offset& a, const Offset& b) {
        if (a.d[2] != b.d[2]) return a.d[2] < b.d[2];
        if (a.d[1] != b.d[1]) return a.d[1] < b.d[1];
        return a.d[0] < b.d[0];
    });
    return offs;
}

int offset_slot(const std::vector<Offset>& offs, int dx, int dy, int dz) {
    for (std::size_t i = 0; i < offs.size(); ++i)
        if (offs[i].d[0] == dx && offs[i].d[1] == dy && offs[i].d[2] == dz) return int(i);
    return -1;
}

double sym_quad(const SymMat& A, const Vec3& a, const Vec3& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s += a[i] * A.m[i][j] * b[j];
    return s;
}

double dot(const Vec3& a, const Vec3& b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += a[k] * b[k];
    return s;
}

double factorial(int d) { return d == 3 ? 6.0 : (d == 2 ? 2.0 : 1.0); }

} // namespace

SparseSystem assemble(const MeshPtr& mesh, const CoefficientField& A, const MeasureSpec& mu,
                      const Load& load) {
    const Mesh& m = *mesh;
    if (A.dim() != m.dim) throw std::invalid_argument("assemble: coefficient dimension mismatch");
    if (load.f.mesh.get() != mesh.get() || load.f.size() != m.node_count())
        throw std::invalid_argument("assemble: load not bound to this mesh");
    if (mu.kind() == MeasureSpec::Kind::grid_density &&
        mu.field().size() != m.node_count())
        throw std::invalid_argument("assemble: measure density not bound to this mesh");

    const int dim = m.dim;
    const std::size_t n = m.node_count();
    const auto simplices = kuhn_simplices(dim);
    const bool cross = A.has_cross_terms();
    const auto offs = stencil_offsets(dim, cross);
    const int n_off = int(offs.size());
    const int nv = dim + 1;
    const double scale = std::pow(m.h, dim - 2) / factorial(dim);

    // corner index deltas within the node grid
    std::size_t corner_delta[8];
    for (int c = 0; c < (1 << dim); ++c)
        corner_delta[c] = std::size_t(c & 1) + std::size_t((c >> 1) & 1) * m.nodes[0] +
                          std::size_t((c >> 2) & 1) * m.nodes[0] * m.nodes[1];

    // Per-cell contributions, flattened over simplices and corner pairs.
    // Pairs outside the offset table must carry an exactly-zero local entry
    // (skip pairs of the monotone corner path under diagonal coefficients);
    // anything else means the stencil table is wrong for this coefficient.
    const bool constant_A =
        (A.kind() == CoefficientField::Kind::constant) && !A.has_core();
    SymMat A0 = constant_A ? A.eval(Vec3{}) : SymMat{};
    struct Contrib {
        std::size_t row_delta;
        int slot;
        double geo;
    };
    std::vector<Contrib> contribs;
    for (const Simplex& sx : simplices)
        for (int a = 0; a < nv; ++a)
            for (int b = 0; b < nv; ++b) {
                double g = scale * (constant_A ? sym_quad(A0, sx.grad[a], sx.grad[b], dim)
                                               : dot(sx.grad[a], sx.grad[b], dim));
                int d[3];
                for (int k = 0; k < 3; ++k)
                    d[k] = ((sx.corners[b] >> k) & 1) - ((sx.corners[a] >> k) & 1);
                int slot = offset_slot(offs, d[0], d[1], d[2]);
                if (slot < 0) {
                    if (g != 0.0)
                        throw std::logic_error("assemble: offset table missed a coupling");
                    continue;
                }
                if (g == 0.0) continue;
                contribs.push_back({corner_delta[sx.corners[a]], slot, g});
            }

    std::vector<std::vector<double>> acc(n_off, std::vector<double>(n, 0.0));
    for (int cz = 0; cz < m.cells[2]; ++cz)
        for (int cy = 0; cy < m.cells[1]; ++cy)
            for (int cx = 0; cx < m.cells[0]; ++cx) {
                double a_c = constant_A ? 1.0 : A.eval_scalar(m.cell_center(cx, cy, cz));
                std::size_t base = m.node_index(cx, cy, cz);
                for (const Contrib& c : contribs)
                    acc[c.slot][base + c.row_delta] += a_c * c.geo;
            }

    SparseSystem sys;
    sys.mesh = mesh;
    sys.rhs.assign(n, 0.0);
    sys.free_mask.assign(n, 1);

    const bool holes_fixed = (mu.kind() == MeasureSpec::Kind::hole_dirichlet);
    const int diag_slot = offset_slot(offs, 0, 0, 0);
    for (std::size_t i = 0; i < n; ++i) {
        NodeClass c = m.node_class[i];
        if (c == NodeClass::outer_boundary || (holes_fixed && c == NodeClass::hole_interior))
            sys.free_mask[i] = 0;
        double lump = m.lumped_mass(i);
        double w = holes_fixed ? 0.0 : mu.node_weight(m, i);
        acc[diag_slot][i] += w;
        sys.rhs[i] = load.f[i] * lump + (load.g ? (*load.g)[i] * w : 0.0);
    }

    // offset-array accumulation -> CSR
    CsrMatrix& K = sys.matrix;
    K.n = n;
    K.row_ptr.assign(n + 1, 0);
    std::vector<long> deltas(n_off);
    for (int o = 0; o < n_off; ++o)
        deltas[o] = long(offs[o].d[0]) + long(offs[o].d[1]) * m.nodes[0] +
                    long(offs[o].d[2]) * m.nodes[0] * m.nodes[1];
    auto valid = [&](int ix, int iy, int iz, const Offset& o) {
        int jx = ix + o.d[0], jy = iy + o.d[1], jz = iz + o.d[2];
        return jx >= 0 && jy >= 0 && jz >= 0 && jx < m.nodes[0] && jy < m.nodes[1] &&
               jz < m.nodes[2];
    };
    for (std::size_t i = 0; i < n; ++i) {
        int ix, iy, iz;
        m.node_multi_index(i, ix, iy, iz);
        std::size_t cnt = 0;
        for (int o = 0; o < n_off; ++o)
            if (valid(ix, iy, iz, offs[o])) ++cnt;
        K.row_ptr[i + 1] = K.row_ptr[i] + cnt;
    }
    K.cols.resize(K.row_ptr[n]);
    K.vals.resize(K.row_ptr[n]);
    for (std::size_t i = 0; i < n; ++i) {
        int ix, iy, iz;
        m.node_multi_index(i, ix, iy, iz);
        std::size_t k = K.row_ptr[i];
        for (int o = 0; o < n_off; ++o) {
            if (!valid(ix, iy, iz, offs[o])) continue;
            K.cols[k] = std::uint32_t(long(i) + deltas[o]);
            K.vals[k] = acc[o][i];
            ++k;
        }
    }
    return sys;
}

std::vector<double> flux_load(const MeshPtr& mesh,
                              const std::function<Vec3(const Vec3&)>& q) {
    const Mesh& m = *mesh;
    const int dim = m.dim;
    const auto simplices = kuhn_simplices(dim);
    const int nv = dim + 1;
    const double vol = std::pow(m.h, dim) / factorial(dim);
    std::size_t corner_delta[8];
    for (int c = 0; c < (1 << dim); ++c)
        corner_delta[c] = std::size_t(c & 1) + std::size_t((c >> 1) & 1) * m.nodes[0] +
                          std::size_t((c >> 2) & 1) * m.nodes[0] * m.nodes[1];
    std::vector<double> rhs(m.node_count(), 0.0);
    for (int cz = 0; cz < m.cells[2]; ++cz)
        for (int cy = 0; cy < m.cells[1]; ++cy)
            for (int cx = 0; cx < m.cells[0]; ++cx) {
                Vec3 qc = q(m.cell_center(cx, cy, cz));
                std::size_t base = m.node_index(cx, cy, cz);
                for (const Simplex& s : simplices)
                    for (int a = 0; a < nv; ++a) {
                        double g = 0.0;
                        for (int k = 0; k < dim; ++k) g += qc[k] * s.grad[a][k];
                        rhs[base + corner_delta[s.corners[a]]] += vol * g / m.h;
                    }
            }
    return rhs;
}

NodalField solve_system(const SparseSystem& sys, const SolverParams& params, SolveInfo* info) {
    std::vector<double> u;
    SolveInfo local = pcg_solve(sys.matrix, sys.rhs, sys.free_mask, params, u);
    if (info) *info = local;
    else if (!local.converged)
        throw std::runtime_error("solve_system: " +
                                 (local.failure.empty()
                                      ? "no convergence within max_iter, residual " +
                                            std::to_string(local.rel_residual)
                                      : local.failure));
    NodalField out(sys.mesh);
    out.values = std::move(u);
    return out;
}

double energy_inner(const NodalField& u, const NodalField& v, const CoefficientField& A,
                    const std::optional<Domain>& subbox) {
    const Mesh& m = *u.mesh;
    if (v.mesh.get() != u.mesh.get())
        throw std::invalid_argument("energy_inner: fields on different meshes");
    const int dim = m.dim;
    const auto simplices = kuhn_simplices(dim);
    const int nv = dim + 1;
    const double vol = std::pow(m.h, dim) / factorial(dim);
    const bool constant_A =
        (A.kind() == CoefficientField::Kind::constant) && !A.has_core();
    SymMat A0 = constant_A ? A.eval(Vec3{}) : SymMat{};
    std::size_t corner_delta[8];
    for (int c = 0; c < (1 << dim); ++c)
        corner_delta[c] = std::size_t(c & 1) + std::size_t((c >> 1) & 1) * m.nodes[0] +
                          std::size_t((c >> 2) & 1) * m.nodes[0] * m.nodes[1];
    double total = 0.0;
    for (int cz = 0; cz < m.cells[2]; ++cz)
        for (int cy = 0; cy < m.cells[1]; ++cy)
            for (int cx = 0; cx < m.cells[0]; ++cx) {
                Vec3 center = m.cell_center(cx, cy, cz);
                if (subbox && !subbox->contains(center)) continue;
                std::size_t base = m.node_index(cx, cy, cz);
                double a_c = constant_A ? 0.0 : A.eval_scalar(center);
                for (const Simplex& s : simplices) {
                    Vec3 gu{}, gv{};
                    for (int a = 0; a < nv; ++a) {
                        std::size_t id = base + corner_delta[s.corners[a]];
                        for (int k = 0; k < dim; ++k) {
                            gu[k] += u[id] * s.grad[a][k];
                            gv[k] += v[id] * s.grad[a][k];
                        }
                    }
                    for (int k = 0; k < dim; ++k) {
                        gu[k] /= m.h;
                        gv[k] /= m.h;
                    }
                    total += vol * (constant_A ? sym_quad(A0, gu, gv, dim)
                                               : a_c * dot(gu, gv, dim));
                }
            }
    return total;
}

double energy_seminorm(const NodalField& u, const CoefficientField& A,
                       const std::optional<Domain>& subbox) {
    return energy_inner(u, u, A, subbox);
}

double weighted_mass(const NodalField& u, const NodalField& v, const MeasureSpec& mu) {
    if (mu.kind() == MeasureSpec::Kind::hole_dirichlet)
        throw std::invalid_argument("weighted_mass: hole_dirichlet carries no density");
    const Mesh& m = *u.mesh;
    if (v.mesh.get() != u.mesh.get())
        throw std::invalid_argument("weighted_mass: fields on different meshes");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i] * mu.node_weight(m, i);
    return s;
}

NodalField reaction_forces(const SparseSystem& sys, const NodalField& u, double check_tol) {
    if (u.mesh.get() != sys.mesh.get())
        throw std::invalid_argument("reaction_forces: field not bound to the system mesh");
    std::vector<double> ku;
    sys.matrix.mul(u.values, ku);
    NodalField r(sys.mesh);
    double free2 = 0.0, rhs2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = sys.rhs[i] - ku[i];
        rhs2 += sys.rhs[i] * sys.rhs[i];
        if (sys.free_mask[i]) free2 += r[i] * r[i];
    }
    if (rhs2 > 0.0 && std::sqrt(free2) > check_tol * std::sqrt(rhs2))
        throw std::runtime_error("reaction_forces: free-dof residual too large, not a solution");
    return r;
}

std::pair<double, double> h1_l2_errors(const NodalField& u,
                                       const std::function<double(const Vec3&)>& exact,
                                       const std::function<Vec3(const Vec3&)>& exact_grad) {
    const Mesh& m = *u.mesh;
    const int dim = m.dim;
    const auto simplices = kuhn_simplices(dim);
    const int nv = dim + 1;
    const double vol = std::pow(m.h, dim) / factorial(dim);

    // degree-2 barycentric quadrature
    std::vector<std::array<double, 4>> qpts;
    std::vector<double> qw;
    if (dim == 2) {
        qpts = {{0.5, 0.5, 0.0, 0.0}, {0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.5, 0.0}};
        qw = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    } else {
        const double al = 0.58541019662496845446;
        const double be = 0.13819660112501051518;
        qpts = {{al, be, be, be}, {be, al, be, be}, {be, be, al, be}, {be, be, be, al}};
        qw = {0.25, 0.25, 0.25, 0.25};
    }

    std::size_t corner_delta[8];
    for (int c = 0; c < (1 << dim); ++c)
        corner_delta[c] = std::size_t(c & 1) + std::size_t((c >> 1) & 1) * m.nodes[0] +
                          std::size_t((c >> 2) & 1) * m.nodes[0] * m.nodes[1];

    double e_h1 = 0.0, e_l2 = 0.0;
    for (int cz = 0; cz < m.cells[2]; ++cz)
        for (int cy = 0; cy < m.cells[1]; ++cy)
            for (int cx = 0; cx < m.cells[0]; ++cx) {
                std::size_t base = m.node_index(cx, cy, cz);
                Vec3 corner0 = m.node_coord(base);
                for (const Simplex& s : simplices) {
                    double uv[4];
                    Vec3 pv[4];
                    Vec3 gu{};
                    for (int a = 0; a < nv; ++a) {
                        std::size_t id = base + corner_delta[s.corners[a]];
                        uv[a] = u[id];
                        for (int k = 0; k < dim; ++k) {
                            pv[a][k] = corner0[k] + m.h * ((s.corners[a] >> k) & 1);
                            gu[k] += uv[a] * s.grad[a][k] / m.h;
                        }
                    }
                    for (std::size_t q = 0; q < qpts.size(); ++q) {
                        Vec3 x{};
                        double uh = 0.0;
                        for (int a = 0; a < nv; ++a) {
                            uh += qpts[q][a] * uv[a];
                            for (int k = 0; k < dim; ++k) x[k] += qpts[q][a] * pv[a][k];
                        }
                        double du = uh - exact(x);
                        e_l2 += vol * qw[q] * du * du;
                        Vec3 ge = exact_grad(x);
                        double g2 = 0.0;
                        for (int k = 0; k < dim; ++k) {
                            double d = gu[k] - ge[k];
                            g2 += d * d;
                        }
                        e_h1 += vol * qw[q] * g2;
                    }
                }
            }
    return {std::sqrt(e_h1), std::sqrt(e_l2)};
}

} // namespace perfhom
