#include "perfhom/model.hpp"

#include <cmath>
#include <numbers>

namespace perfhom {

Domain Domain::box(int dim, const Vec3& lower, const Vec3& upper) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("Domain: dim must be 1, 2 or 3");
    for (int k = 0; k < dim; ++k)
        if (!(upper[k] > lower[k]))
            throw std::invalid_argument("Domain: upper must exceed lower on every axis");
    Domain d;
    d.dim = dim;
    d.lower = lower;
    d.upper = upper;
    return d;
}

double Domain::volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= edge(k);
    return v;
}

bool Domain::contains(const Vec3& x) const {
    for (int k = 0; k < dim; ++k)
        if (!(x[k] > lower[k] && x[k] < upper[k])) return false;
    return true;
}

double Domain::dist(const Vec3& x) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = 0.0;
        if (x[k] < lower[k]) d = lower[k] - x[k];
        else if (x[k] > upper[k]) d = x[k] - upper[k];
        s += d * d;
    }
    return std::sqrt(s);
}

double unit_sphere_area(int n) {
    if (n < 2) throw std::invalid_argument("unit_sphere_area: n >= 2 required");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

static void check_lattice_params(double eps, int n, double gamma) {
    if (n < 3) throw std::invalid_argument("lattice parameters: n >= 3 required");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("lattice parameters: eps must lie in (0,1)");
    double gmax = double(n) / double(n - 2);
    if (!(gamma > 1.0 && gamma < gmax))
        throw std::invalid_argument("lattice parameters: gamma must lie in (1, n/(n-2))");
}

double c_eps(double eps, int n, double gamma) {
    check_lattice_params(eps, n, gamma);
    return 1.0 / (1.0 - std::pow(eps, double(n) - gamma * double(n - 2)));
}

double mu0_prediction(double b, int n) {
    if (n < 3) throw std::invalid_argument("mu0_prediction: n >= 3 required");
    if (!(b > 0.0)) throw std::invalid_argument("mu0_prediction: b > 0 required");
    return b * double(n - 2) * unit_sphere_area(n);
}

PerforationLattice PerforationLattice::cubic(double eps, int dim, double gamma) {
    check_lattice_params(eps, dim, gamma);
    PerforationLattice lat;
    lat.eps = eps;
    lat.gamma = gamma;
    lat.dim = dim;
    lat.r_outer = std::pow(eps, gamma);
    lat.r_hole = std::pow(eps, double(dim) / double(dim - 2));
    return lat;
}

std::vector<Vec3> lattice_centers(const PerforationLattice& lat, const Domain& domain) {
    if (lat.dim != domain.dim)
        throw std::invalid_argument("lattice_centers: dimension mismatch");
    const double eps = lat.eps;
    long lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int k = 0; k < lat.dim; ++k) {
        lo[k] = long(std::floor((domain.lower[k] - eps) / eps)) - 1;
        hi[k] = long(std::ceil((domain.upper[k] + eps) / eps)) + 1;
    }
    std::vector<Vec3> centers;
    long kz_lo = (lat.dim > 2) ? lo[2] : 0, kz_hi = (lat.dim > 2) ? hi[2] : 0;
    for (long iz = kz_lo; iz <= kz_hi; ++iz)
        for (long iy = lo[1]; iy <= hi[1]; ++iy)
            for (long ix = lo[0]; ix <= hi[0]; ++ix) {
                Vec3 x = {eps * double(ix), eps * double(iy), eps * double(iz)};
                if (lat.dim < 3) x[2] = 0.0;
                if (domain.dist(x) < eps) centers.push_back(x);
            }
    return centers;
}

std::size_t lattice_center_count(const PerforationLattice& lat, const Domain& domain) {
    if (lat.dim != domain.dim)
        throw std::invalid_argument("lattice_center_count: dimension mismatch");
    const double eps = lat.eps;
    long lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int k = 0; k < lat.dim; ++k) {
        lo[k] = long(std::floor((domain.lower[k] - eps) / eps)) - 1;
        hi[k] = long(std::ceil((domain.upper[k] + eps) / eps)) + 1;
    }
    std::size_t count = 0;
    long kz_lo = (lat.dim > 2) ? lo[2] : 0, kz_hi = (lat.dim > 2) ? hi[2] : 0;
    for (long iz = kz_lo; iz <= kz_hi; ++iz)
        for (long iy = lo[1]; iy <= hi[1]; ++iy)
            for (long ix = lo[0]; ix <= hi[0]; ++ix) {
                Vec3 x = {eps * double(ix), eps * double(iy), eps * double(iz)};
                if (lat.dim < 3) x[2] = 0.0;
                if (domain.dist(x) < eps) ++count;
            }
    return count;
}

SymMat SymMat::identity(int dim, double scale) {
    SymMat s;
    s.dim = dim;
    for (int k = 0; k < dim; ++k) s.m[k][k] = scale;
    return s;
}

SymMat SymMat::diag(int dim, const Vec3& d) {
    SymMat s;
    s.dim = dim;
    for (int k = 0; k < dim; ++k) s.m[k][k] = d[k];
    return s;
}

bool SymMat::has_cross_terms() const {
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
            if (m[i][j] != 0.0) return true;
    return false;
}

double SymMat::quad(const Vec3& x) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s += m[i][j] * x[i] * x[j];
    return s;
}

CoefficientField CoefficientField::constant(const SymMat& value, double alpha, double beta) {
    if (!(alpha > 0.0 && beta >= alpha))
        throw std::invalid_argument("CoefficientField: need 0 < alpha <= beta");
    for (int i = 0; i < value.dim; ++i)
        for (int j = i + 1; j < value.dim; ++j)
            if (value.m[i][j] != value.m[j][i])
                throw std::invalid_argument("CoefficientField: matrix must be symmetric");
    CoefficientField f;
    f.kind_ = Kind::constant;
    f.dim_ = value.dim;
    f.alpha_ = alpha;
    f.beta_ = beta;
    f.value_ = value;
    return f;
}

CoefficientField CoefficientField::two_phase(double a, double b, const PerforationLattice& lat,
                                             double alpha, double beta) {
    if (!(alpha > 0.0 && beta >= alpha))
        throw std::invalid_argument("CoefficientField: need 0 < alpha <= beta");
    if (a < alpha || a > beta || b < alpha || b > beta)
        throw std::invalid_argument("CoefficientField: phases must lie in [alpha, beta]");
    CoefficientField f;
    f.kind_ = Kind::two_phase;
    f.dim_ = lat.dim;
    f.alpha_ = alpha;
    f.beta_ = beta;
    f.a_ = a;
    f.b_ = b;
    f.lattice_ = lat;
    return f;
}

CoefficientField CoefficientField::laminate(int dim, int axis, double period,
                                            std::vector<std::pair<double, double>> profile,
                                            double alpha, double beta) {
    if (!(alpha > 0.0 && beta >= alpha))
        throw std::invalid_argument("CoefficientField: need 0 < alpha <= beta");
    if (axis < 0 || axis >= dim) throw std::invalid_argument("CoefficientField: bad axis");
    if (!(period > 0.0)) throw std::invalid_argument("CoefficientField: period > 0 required");
    double total = 0.0;
    for (auto& [frac, val] : profile) {
        if (!(frac > 0.0)) throw std::invalid_argument("CoefficientField: fractions must be positive");
        if (val < alpha || val > beta)
            throw std::invalid_argument("CoefficientField: phases must lie in [alpha, beta]");
        total += frac;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("CoefficientField: fractions must sum to 1");
    CoefficientField f;
    f.kind_ = Kind::laminate;
    f.dim_ = dim;
    f.alpha_ = alpha;
    f.beta_ = beta;
    f.axis_ = axis;
    f.period_ = period;
    f.profile_ = std::move(profile);
    return f;
}

CoefficientField CoefficientField::extended(const CoefficientField& base, const Domain& core,
                                            double outside) {
    if (core.dim != base.dim_)
        throw std::invalid_argument("CoefficientField::extended: dimension mismatch");
    if (!base.isotropic())
        throw std::invalid_argument("CoefficientField::extended: base must be isotropic");
    if (outside < base.alpha_ || outside > base.beta_)
        throw std::invalid_argument(
            "CoefficientField::extended: outside value must lie in [alpha, beta]");
    CoefficientField f = base;
    f.has_core_ = true;
    f.core_ = core;
    f.outside_ = outside;
    return f;
}

bool CoefficientField::has_cross_terms() const {
    return kind_ == Kind::constant && value_.has_cross_terms();
}

bool CoefficientField::isotropic() const {
    if (kind_ != Kind::constant) return true;
    if (value_.has_cross_terms()) return false;
    for (int k = 1; k < dim_; ++k)
        if (value_.m[k][k] != value_.m[0][0]) return false;
    return true;
}

double CoefficientField::eval_scalar(const Vec3& x) const {
    if (has_core_ && !core_.contains(x)) return outside_;
    switch (kind_) {
        case Kind::constant:
            if (!isotropic())
                throw std::logic_error("eval_scalar: field is not pointwise isotropic");
            return value_.m[0][0];
        case Kind::two_phase: {
            // Nearest lattice center decides the phase; outer balls are
            // disjoint so the nearest one is the only candidate.
            double r2 = 0.0;
            for (int k = 0; k < dim_; ++k) {
                double i = std::round(x[k] / lattice_.eps);
                double d = x[k] - lattice_.eps * i;
                r2 += d * d;
            }
            return (r2 < lattice_.r_outer * lattice_.r_outer) ? b_ : a_;
        }
        case Kind::laminate: {
            double t = x[axis_] / period_;
            t -= std::floor(t);
            double acc = 0.0;
            for (auto& [frac, val] : profile_) {
                acc += frac;
                if (t < acc) return val;
            }
            return profile_.back().second;
        }
    }
    throw std::logic_error("eval_scalar: unreachable");
}

SymMat CoefficientField::eval(const Vec3& x) const {
    if (kind_ == Kind::constant && !has_core_) return value_;
    return SymMat::identity(dim_, eval_scalar(x));
}

SymMat laminate_h_limit(int dim, int axis,
                        const std::vector<std::pair<double, double>>& profile) {
    double harm = 0.0, arith = 0.0;
    for (auto& [frac, val] : profile) {
        harm += frac / val;
        arith += frac * val;
    }
    harm = 1.0 / harm;
    SymMat s;
    s.dim = dim;
    for (int k = 0; k < dim; ++k) s.m[k][k] = (k == axis) ? harm : arith;
    return s;
}

} // namespace perfhom
