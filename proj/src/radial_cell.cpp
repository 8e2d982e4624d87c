#include "perfhom/radial_cell.hpp"

#include <cmath>
#include <numbers>

namespace perfhom {

RadialCell RadialCell::make(double eps, int n, double gamma, const Vec3& center) {
    RadialCell cell;
    cell.c = c_eps(eps, n, gamma);  // validates the parameter range
    cell.eps = eps;
    cell.n = n;
    cell.gamma = gamma;
    cell.center = center;
    return cell;
}

double RadialCell::r_hole() const { return std::pow(eps, double(n) / double(n - 2)); }
double RadialCell::r_outer() const { return std::pow(eps, gamma); }

double shell_value(const RadialCell& cell, double r) {
    if (r <= cell.r_hole()) return 0.0;
    return cell.c * (1.0 - std::pow(cell.eps, cell.n) * std::pow(r, 2.0 - cell.n));
}

double shell_value(const RadialCell& cell, const Vec3& x) {
    double r2 = 0.0;
    for (int k = 0; k < cell.n && k < 3; ++k) {
        double d = x[k] - cell.center[k];
        r2 += d * d;
    }
    return shell_value(cell, std::sqrt(r2));
}

NodalField shell_field(const PerforationLattice& lat, const MeshPtr& mesh) {
    if (lat.dim != mesh->dim) throw std::invalid_argument("shell_field: dimension mismatch");
    const Mesh& m = *mesh;
    RadialCell cell = RadialCell::make(lat.eps, lat.dim, lat.gamma);
    NodalField u(mesh, 1.0);
    const double ro = lat.r_outer;
    for (std::size_t i = 0; i < u.size(); ++i) {
        Vec3 x = m.node_coord(i);
        double r2 = 0.0;
        for (int k = 0; k < m.dim; ++k) {
            double d = x[k] - lat.eps * std::round(x[k] / lat.eps);
            r2 += d * d;
        }
        double r = std::sqrt(r2);
        if (r < ro) u[i] = shell_value(cell, r);
    }
    return u;
}

double cell_energy_closed_form(double eps, int n, double gamma) {
    return double(n - 2) * unit_sphere_area(n) * c_eps(eps, n, gamma) * std::pow(eps, n);
}

double radial_energy_integral(const RadialCell& cell, double r0, double r1, int radial_points) {
    if (radial_points < 16)
        throw std::invalid_argument("radial_energy_integral: radial_points >= 16 required");
    if (!(r1 >= r0) || r0 < 0.0)
        throw std::invalid_argument("radial_energy_integral: bad interval");
    if (r1 == r0) return 0.0;
    const double S = unit_sphere_area(cell.n);
    const double deriv_coef = cell.c * std::pow(cell.eps, cell.n) * double(cell.n - 2);
    auto integrand = [&](double r) {
        double dw = deriv_coef * std::pow(r, 1.0 - cell.n);
        return S * std::pow(r, cell.n - 1.0) * dw * dw;
    };
    // composite Simpson over an even number of intervals
    int intervals = radial_points - 1;
    if (intervals % 2 == 1) ++intervals;
    const double dr = (r1 - r0) / intervals;
    double sum = integrand(r0) + integrand(r1);
    for (int k = 1; k < intervals; ++k)
        sum += integrand(r0 + dr * k) * (k % 2 == 1 ? 4.0 : 2.0);
    return sum * dr / 3.0;
}

double cell_energy_quadrature(const RadialCell& cell, int radial_points) {
    return radial_energy_integral(cell, cell.r_hole(), cell.r_outer(), radial_points);
}

EnergyBound energy_bound_check(const PerforationLattice& lat, const Domain& domain) {
    EnergyBound out;
    auto centers = lattice_centers(lat, domain);
    out.n_centers = centers.size();
    for (const Vec3& c : centers) {
        bool inside = true;
        for (int k = 0; k < lat.dim; ++k)
            inside = inside && (c[k] - domain.lower[k] >= lat.r_outer) &&
                     (domain.upper[k] - c[k] >= lat.r_outer);
        if (inside) ++out.n_interior;
    }
    const double e_cell = cell_energy_closed_form(lat.eps, lat.dim, lat.gamma);
    out.interior_lhs = double(out.n_interior) * e_cell;
    out.rhs = double(out.n_centers) * e_cell;
    return out;
}

std::vector<Vec3> fibonacci_sphere_points(int count) {
    if (count < 1) throw std::invalid_argument("fibonacci_sphere_points: count >= 1");
    std::vector<Vec3> pts(count);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        double z = -1.0 + 2.0 * (k + 0.5) / count;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double th = golden * k;
        pts[k] = {rho * std::cos(th), rho * std::sin(th), z};
    }
    return pts;
}

double sphere_measure_pairing(const PerforationLattice& lat, const Domain& domain,
                              const std::function<double(const Vec3&)>& phi, double b,
                              int sphere_points, bool clip) {
    if (lat.dim != 3)
        throw std::invalid_argument("sphere_measure_pairing: sphere quadrature is 3D only");
    if (sphere_points < 50)
        throw std::invalid_argument("sphere_measure_pairing: sphere_points >= 50 required");
    const double c = c_eps(lat.eps, lat.dim, lat.gamma);
    const double ro = lat.r_outer;
    const double sphere_area = unit_sphere_area(lat.dim) * std::pow(ro, lat.dim - 1);
    const double density =
        b * double(lat.dim - 2) * c *
        std::pow(lat.eps, double(lat.dim) - lat.gamma * double(lat.dim - 1));
    const auto unit_pts = fibonacci_sphere_points(sphere_points);
    const double w = sphere_area / double(sphere_points);

    auto centers = lattice_centers(lat, domain);
    std::vector<double> per_center(centers.size(), 0.0);
    for (std::size_t i = 0; i < centers.size(); ++i) {
        double s = 0.0;
        for (const Vec3& p : unit_pts) {
            Vec3 x = {centers[i][0] + ro * p[0], centers[i][1] + ro * p[1],
                      centers[i][2] + ro * p[2]};
            if (clip && !domain.contains(x)) continue;
            s += phi(x);
        }
        per_center[i] = s * w;
    }
    return density * pairwise_sum(per_center);
}

double sphere_measure_pairing_ones(const PerforationLattice& lat, const Domain& domain,
                                   double b) {
    const double c = c_eps(lat.eps, lat.dim, lat.gamma);
    return b * double(lat.dim - 2) * unit_sphere_area(lat.dim) * c *
           double(lattice_center_count(lat, domain)) * std::pow(lat.eps, lat.dim);
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double v : xs) s += v;
        return s;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace perfhom
