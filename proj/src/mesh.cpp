#include "perfhom/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace perfhom {

Vec3 Mesh::node_coord(std::size_t id) const {
    int ix, iy, iz;
    node_multi_index(id, ix, iy, iz);
    Vec3 x{};
    int idx[3] = {ix, iy, iz};
    for (int k = 0; k < dim; ++k)
        x[k] = domain.lower[k] + domain.edge(k) * double(idx[k]) / double(cells[k]);
    return x;
}

Vec3 Mesh::cell_center(int cx, int cy, int cz) const {
    Vec3 x{};
    int idx[3] = {cx, cy, cz};
    for (int k = 0; k < dim; ++k)
        x[k] = domain.lower[k] + domain.edge(k) * (double(idx[k]) + 0.5) / double(cells[k]);
    return x;
}

bool Mesh::on_outer_boundary(int ix, int iy, int iz) const {
    int idx[3] = {ix, iy, iz};
    for (int k = 0; k < dim; ++k)
        if (idx[k] == 0 || idx[k] == cells[k]) return true;
    return false;
}

double Mesh::lumped_mass(std::size_t id) const {
    int ix, iy, iz;
    node_multi_index(id, ix, iy, iz);
    int idx[3] = {ix, iy, iz};
    double frac = 1.0;
    for (int k = 0; k < dim; ++k)
        if (idx[k] == 0 || idx[k] == cells[k]) frac *= 0.5;
    return frac * std::pow(h, dim);
}

MeshPtr build_mesh(const Domain& domain, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("build_mesh: h > 0 required");
    Mesh m;
    m.domain = domain;
    m.h = h;
    m.dim = domain.dim;
    for (int k = 0; k < m.dim; ++k) {
        double cells = domain.edge(k) / h;
        long c = std::lround(cells);
        if (c < 2)
            throw std::invalid_argument("build_mesh: h too large (need at least 3 nodes per axis)");
        if (std::abs(cells - double(c)) > 1e-9 * std::max(1.0, cells))
            throw std::invalid_argument("build_mesh: h must divide every box edge");
        m.cells[k] = int(c);
        m.nodes[k] = int(c) + 1;
    }
    m.node_class.assign(m.node_count(), NodeClass::interior);
    for (int iz = 0; iz < m.nodes[2]; ++iz)
        for (int iy = 0; iy < m.nodes[1]; ++iy)
            for (int ix = 0; ix < m.nodes[0]; ++ix)
                if (m.on_outer_boundary(ix, iy, iz))
                    m.node_class[m.node_index(ix, iy, iz)] = NodeClass::outer_boundary;
    return std::make_shared<const Mesh>(std::move(m));
}

MeshPtr classify_balls(const MeshPtr& mesh, std::span<const Vec3> centers, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("classify_balls: radius > 0 required");
    Mesh m = *mesh;
    if (radius < m.h) m.hole_resolution_warning = true;

    const double r2 = radius * radius;
    for (const Vec3& c : centers) {
        // Index window around the ball, clamped to the grid.
        int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        for (int k = 0; k < m.dim; ++k) {
            double step = m.domain.edge(k) / m.cells[k];
            double rel = (c[k] - m.domain.lower[k]) / step;
            lo[k] = std::max(0, int(std::ceil(rel - radius / step - 1)));
            hi[k] = std::min(m.nodes[k] - 1, int(std::floor(rel + radius / step + 1)));
        }
        for (int iz = lo[2]; iz <= hi[2]; ++iz)
            for (int iy = lo[1]; iy <= hi[1]; ++iy)
                for (int ix = lo[0]; ix <= hi[0]; ++ix) {
                    std::size_t id = m.node_index(ix, iy, iz);
                    Vec3 x = m.node_coord(id);
                    double d2 = 0.0;
                    for (int k = 0; k < m.dim; ++k) {
                        double d = x[k] - c[k];
                        d2 += d * d;
                    }
                    // outer boundary keeps its tag: those dofs are pinned anyway
                    if (d2 <= r2 && m.node_class[id] != NodeClass::outer_boundary)
                        m.node_class[id] = NodeClass::hole_interior;
                }
    }

    // Hole boundary ring: untagged axis-neighbors of hole nodes.
    const int offs[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int iz = 0; iz < m.nodes[2]; ++iz)
        for (int iy = 0; iy < m.nodes[1]; ++iy)
            for (int ix = 0; ix < m.nodes[0]; ++ix) {
                std::size_t id = m.node_index(ix, iy, iz);
                if (m.node_class[id] != NodeClass::interior) continue;
                bool near = false;
                for (int k = 0; k < m.dim && !near; ++k)
                    for (int s = -1; s <= 1 && !near; s += 2) {
                        int jx = ix + s * offs[k][0], jy = iy + s * offs[k][1],
                            jz = iz + s * offs[k][2];
                        if (jx < 0 || jy < 0 || jz < 0 || jx >= m.nodes[0] ||
                            jy >= m.nodes[1] || jz >= m.nodes[2])
                            continue;
                        near = m.node_class[m.node_index(jx, jy, jz)] == NodeClass::hole_interior;
                    }
                if (near) m.node_class[id] = NodeClass::hole_boundary;
            }
    return std::make_shared<const Mesh>(std::move(m));
}

MeshPtr classify_holes(const MeshPtr& mesh, const PerforationLattice& lat) {
    if (lat.dim != mesh->dim) throw std::invalid_argument("classify_holes: dimension mismatch");
    auto centers = lattice_centers(lat, mesh->domain);
    return classify_balls(mesh, centers, lat.r_hole);
}

std::size_t count_class(const Mesh& mesh, NodeClass c) {
    return std::size_t(std::count(mesh.node_class.begin(), mesh.node_class.end(), c));
}

NodalField NodalField::from_function(const MeshPtr& m,
                                     const std::function<double(const Vec3&)>& f) {
    NodalField u(m);
    for (std::size_t i = 0; i < u.size(); ++i) u.values[i] = f(m->node_coord(i));
    return u;
}

double NodalField::sample(const Vec3& x) const {
    const Mesh& m = *mesh;
    int base[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < m.dim; ++k) {
        double step = m.domain.edge(k) / m.cells[k];
        double rel = (x[k] - m.domain.lower[k]) / step;
        rel = std::clamp(rel, 0.0, double(m.cells[k]));
        int c = std::min(int(rel), m.cells[k] - 1);
        base[k] = c;
        frac[k] = rel - c;
    }
    double acc = 0.0;
    int corners = 1 << m.dim;
    for (int s = 0; s < corners; ++s) {
        double w = 1.0;
        int idx[3] = {base[0], base[1], base[2]};
        for (int k = 0; k < m.dim; ++k) {
            if (s & (1 << k)) {
                w *= frac[k];
                idx[k] += 1;
            } else {
                w *= 1.0 - frac[k];
            }
        }
        acc += w * values[m.node_index(idx[0], idx[1], idx[2])];
    }
    return acc;
}

bool NodalField::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double linf_norm(const NodalField& u) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::abs(v));
    return m;
}

double linf_diff(const NodalField& u, const NodalField& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
    return m;
}

double lumped_inner(const NodalField& u, const NodalField& v) {
    const Mesh& m = *u.mesh;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i] * m.lumped_mass(i);
    return s;
}

double lumped_l2_norm(const NodalField& u) { return std::sqrt(lumped_inner(u, u)); }

Vec3 cell_gradient(const NodalField& u, int cx, int cy, int cz) {
    const Mesh& m = *u.mesh;
    Vec3 g{};
    int corners = 1 << m.dim;
    for (int k = 0; k < m.dim; ++k) {
        double step = m.domain.edge(k) / m.cells[k];
        double plus = 0.0, minus = 0.0;
        for (int s = 0; s < corners; ++s) {
            int idx[3] = {cx, cy, cz};
            for (int a = 0; a < m.dim; ++a)
                if (s & (1 << a)) idx[a] += 1;
            double val = u[m.node_index(idx[0], idx[1], idx[2])];
            if (s & (1 << k)) plus += val;
            else minus += val;
        }
        g[k] = (plus - minus) / (double(corners / 2) * step);
    }
    return g;
}

std::array<NodalField, 3> nodal_gradient(const NodalField& u) {
    const Mesh& m = *u.mesh;
    std::array<NodalField, 3> grad = {NodalField(u.mesh), NodalField(u.mesh), NodalField(u.mesh)};
    NodalField weight(u.mesh);
    for (int cz = 0; cz < m.cells[2]; ++cz)
        for (int cy = 0; cy < m.cells[1]; ++cy)
            for (int cx = 0; cx < m.cells[0]; ++cx) {
                Vec3 g = cell_gradient(u, cx, cy, cz);
                int corners = 1 << m.dim;
                for (int s = 0; s < corners; ++s) {
                    int idx[3] = {cx, cy, cz};
                    for (int a = 0; a < m.dim; ++a)
                        if (s & (1 << a)) idx[a] += 1;
                    std::size_t id = m.node_index(idx[0], idx[1], idx[2]);
                    for (int k = 0; k < m.dim; ++k) grad[k][id] += g[k];
                    weight[id] += 1.0;
                }
            }
    for (std::size_t i = 0; i < u.size(); ++i)
        for (int k = 0; k < m.dim; ++k) grad[k][i] /= weight[i];
    return grad;
}

} // namespace perfhom
