#pragma once

#include "perfhom/mesh.hpp"

#include <optional>

namespace perfhom {

// Nonnegative reaction measure entering the bilinear form. Discretely every
// variant is a diagonal (lumped) mass term, except hole_dirichlet which pins
// tagged nodes to zero instead.
class MeasureSpec {
  public:
    enum class Kind { zero, constant_density, grid_density, hole_dirichlet, penalized };

    static MeasureSpec zero() { return MeasureSpec(Kind::zero); }
    static MeasureSpec constant_density(double m) {
        if (m < 0.0) throw std::invalid_argument("MeasureSpec: density must be >= 0");
        MeasureSpec s(Kind::constant_density);
        s.density_ = m;
        return s;
    }
    static MeasureSpec grid_density(NodalField field) {
        for (double v : field.values)
            if (!(v >= 0.0)) throw std::invalid_argument("MeasureSpec: density must be >= 0");
        MeasureSpec s(Kind::grid_density);
        s.field_ = std::move(field);
        return s;
    }
    static MeasureSpec hole_dirichlet() { return MeasureSpec(Kind::hole_dirichlet); }
    static MeasureSpec hole_dirichlet(const PerforationLattice& lat) {
        MeasureSpec s(Kind::hole_dirichlet);
        s.lattice_ = lat;
        return s;
    }
    static MeasureSpec penalized(double k) {
        if (!(k > 0.0)) throw std::invalid_argument("MeasureSpec: penalty must be > 0");
        MeasureSpec s(Kind::penalized);
        s.penalty_ = k;
        return s;
    }

    Kind kind() const { return kind_; }
    double density() const { return density_; }
    double penalty() const { return penalty_; }
    const NodalField& field() const { return field_; }
    const std::optional<PerforationLattice>& lattice() const { return lattice_; }

    // Diagonal mass weight of node i (hole_dirichlet has none and throws).
    double node_weight(const Mesh& mesh, std::size_t i) const {
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::constant_density: return density_ * mesh.lumped_mass(i);
            case Kind::grid_density: return field_[i] * mesh.lumped_mass(i);
            case Kind::penalized:
                return mesh.node_class[i] == NodeClass::hole_interior
                           ? penalty_ * mesh.lumped_mass(i)
                           : 0.0;
            case Kind::hole_dirichlet:
                throw std::logic_error("MeasureSpec: hole_dirichlet carries no density");
        }
        return 0.0;
    }

  private:
    explicit MeasureSpec(Kind k) : kind_(k) {}
    Kind kind_;
    double density_ = 0.0;
    double penalty_ = 0.0;
    NodalField field_;
    std::optional<PerforationLattice> lattice_;
};

// Right-hand side: volume density f plus an optional measure-weighted
// density g (paired with the same measure the form uses).
struct Load {
    NodalField f;
    std::optional<NodalField> g;

    static Load of(NodalField f_) { return Load{std::move(f_), std::nullopt}; }
    static Load uniform(const MeshPtr& mesh, double value) {
        return Load{NodalField(mesh, value), std::nullopt};
    }
    static Load with_measure_density(NodalField f_, NodalField g_) {
        return Load{std::move(f_), std::move(g_)};
    }
};

} // namespace perfhom
