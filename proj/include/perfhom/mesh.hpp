#pragma once

#include "perfhom/model.hpp"

#include <functional>
#include <memory>
#include <span>

namespace perfhom {

enum class NodeClass : std::uint8_t {
    interior = 0,
    outer_boundary = 1,
    hole_interior = 2,
    hole_boundary = 3,
};

// Uniform tensor grid over an open box. Spacing h is the same on every axis;
// each edge must be an integer multiple of h (within rounding).
struct Mesh {
    Domain domain;
    double h = 0.0;
    int dim = 0;
    std::array<int, 3> cells{1, 1, 1};  // cells per axis (1 on unused axes)
    std::array<int, 3> nodes{1, 1, 1};  // nodes per axis
    std::vector<NodeClass> node_class;
    bool hole_resolution_warning = false;

    std::size_t node_count() const {
        return std::size_t(nodes[0]) * nodes[1] * nodes[2];
    }
    std::size_t cell_count() const {
        return std::size_t(cells[0]) * cells[1] * cells[2];
    }
    std::size_t node_index(int ix, int iy, int iz) const {
        return (std::size_t(iz) * nodes[1] + iy) * nodes[0] + ix;
    }
    void node_multi_index(std::size_t id, int& ix, int& iy, int& iz) const {
        ix = int(id % nodes[0]);
        iy = int((id / nodes[0]) % nodes[1]);
        iz = int(id / (std::size_t(nodes[0]) * nodes[1]));
    }
    Vec3 node_coord(std::size_t id) const;
    Vec3 cell_center(int cx, int cy, int cz) const;
    bool on_outer_boundary(int ix, int iy, int iz) const;

    // Lumped volume attached to a node: h^dim times the fraction of its
    // surrounding cells that exist (1 interior, 1/2 face, ...).
    double lumped_mass(std::size_t id) const;
};

using MeshPtr = std::shared_ptr<const Mesh>;

MeshPtr build_mesh(const Domain& domain, double h);

// Tag every node within `radius` of one of `centers` as hole_interior, then
// mark untagged axis-neighbors of tagged nodes as hole_boundary. Sets the
// resolution warning when radius < h.
MeshPtr classify_balls(const MeshPtr& mesh, std::span<const Vec3> centers, double radius);

// classify_balls over the lattice's filtered centers with its hole radius.
MeshPtr classify_holes(const MeshPtr& mesh, const PerforationLattice& lat);

std::size_t count_class(const Mesh& mesh, NodeClass c);

// Nodal scalar field bound to a mesh.
struct NodalField {
    MeshPtr mesh;
    std::vector<double> values;

    NodalField() = default;
    explicit NodalField(MeshPtr m, double fill = 0.0)
        : mesh(std::move(m)), values(mesh->node_count(), fill) {}

    static NodalField from_function(const MeshPtr& m,
                                    const std::function<double(const Vec3&)>& f);

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    // Multilinear interpolation at a point (clamped to the closed box).
    double sample(const Vec3& x) const;

    bool all_finite() const;
};

double linf_norm(const NodalField& u);
double linf_diff(const NodalField& u, const NodalField& v);
// Lumped L2 norm sqrt(sum u_i^2 lump_i) and inner product.
double lumped_l2_norm(const NodalField& u);
double lumped_inner(const NodalField& u, const NodalField& v);

// Mean gradient of the multilinear interpolant over one cell (face-mean
// differences of corner values).
Vec3 cell_gradient(const NodalField& u, int cx, int cy, int cz);

// Per-node gradient: average of the adjacent cells' mean gradients.
std::array<NodalField, 3> nodal_gradient(const NodalField& u);

} // namespace perfhom
