#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace perfhom {

// Points and small symmetric matrices are fixed 3-slot objects; the active
// dimension travels with the owning type. Unused slots stay zero.
using Vec3 = std::array<double, 3>;

inline Vec3 vec3(double x, double y = 0.0, double z = 0.0) { return {x, y, z}; }

// Open axis-aligned box (0 < volume required).
struct Domain {
    int dim = 0;
    Vec3 lower{};
    Vec3 upper{};

    static Domain box(int dim, const Vec3& lower, const Vec3& upper);

    double edge(int k) const { return upper[k] - lower[k]; }
    double volume() const;
    bool contains(const Vec3& x) const;           // open box
    double dist(const Vec3& x) const;             // distance to the closure
};

// Surface measure of the unit sphere boundary in R^n (n >= 2).
double unit_sphere_area(int n);

// Normalization constant of the shell profile; requires 0 < eps < 1, n >= 3,
// 1 < gamma < n/(n-2). Tends to 1 as eps -> 0.
double c_eps(double eps, int n, double gamma);

// Density of the limiting reaction measure: b * (n-2) * unit_sphere_area(n).
double mu0_prediction(double b, int n);

// Cubic lattice of spherical perforations: centers at eps*i, hole radius
// eps^{n/(n-2)} inside a coefficient shell of radius eps^gamma.
struct PerforationLattice {
    double eps = 0.0;
    double gamma = 0.0;
    int dim = 0;
    double r_outer = 0.0;
    double r_hole = 0.0;

    static PerforationLattice cubic(double eps, int dim, double gamma);
};

// Centers eps*i with dist(eps*i, domain) < eps, enumerated in lexicographic
// index order (deterministic).
std::vector<Vec3> lattice_centers(const PerforationLattice& lat, const Domain& domain);

// Number of such centers without materializing them (large lattices).
std::size_t lattice_center_count(const PerforationLattice& lat, const Domain& domain);

// Symmetric dim x dim matrix stored dense in the 3x3 corner.
struct SymMat {
    int dim = 0;
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static SymMat identity(int dim, double scale = 1.0);
    static SymMat diag(int dim, const Vec3& d);

    bool has_cross_terms() const;
    // Quadratic form x^T A x.
    double quad(const Vec3& x) const;
};

// Coefficient field A(x), symmetric and uniformly elliptic with stated
// bounds alpha, beta.
class CoefficientField {
  public:
    enum class Kind { constant, two_phase, laminate };

    static CoefficientField constant(const SymMat& value, double alpha, double beta);
    // a*I off the lattice's outer balls, b*I on them.
    static CoefficientField two_phase(double a, double b, const PerforationLattice& lat,
                                      double alpha, double beta);
    // Scalar laminate a(x_axis / period), piecewise constant in equal-phase
    // bands given by (fraction, value) pairs; fractions sum to 1.
    static CoefficientField laminate(int dim, int axis, double period,
                                     std::vector<std::pair<double, double>> profile,
                                     double alpha, double beta);
    // Same field inside `core`, outside*I beyond it (the enlarged-domain
    // device for corrector problems). Base must be pointwise isotropic.
    static CoefficientField extended(const CoefficientField& base, const Domain& core,
                                     double outside);

    Kind kind() const { return kind_; }
    bool has_core() const { return has_core_; }
    int dim() const { return dim_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    bool has_cross_terms() const;
    bool isotropic() const;

    SymMat eval(const Vec3& x) const;
    // Scalar value for pointwise-isotropic fields (two_phase, laminate,
    // scalar constants).
    double eval_scalar(const Vec3& x) const;

  private:
    CoefficientField() = default;
    Kind kind_ = Kind::constant;
    int dim_ = 0;
    double alpha_ = 0.0, beta_ = 0.0;
    SymMat value_{};
    double a_ = 0.0, b_ = 0.0;
    PerforationLattice lattice_{};
    int axis_ = 0;
    double period_ = 0.0;
    std::vector<std::pair<double, double>> profile_;
    bool has_core_ = false;
    Domain core_{};
    double outside_ = 0.0;
};

// Closed-form H-limit of a scalar laminate: harmonic mean along the
// lamination axis, arithmetic mean across.
SymMat laminate_h_limit(int dim, int axis,
                        const std::vector<std::pair<double, double>>& profile);

} // namespace perfhom
