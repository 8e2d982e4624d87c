#include "perfhom/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace perfhom {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
        if (pos != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    double v = parse_double(key, value);
    double r = std::round(v);
    if (std::abs(v - r) > 0.0 || std::abs(r) > 1e9)
        throw ConfigError("config: '" + key + "' wants an integer, got '" + value + "'");
    return static_cast<int>(r);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::string s = value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    return out;
}

Vec3 parse_point(const std::string& key, const std::string& value) {
    std::vector<double> v = parse_list(key, value);
    if (v.size() < 2 || v.size() > 3)
        throw ConfigError("config: '" + key + "' wants 2 or 3 coordinates");
    Vec3 p{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < v.size(); ++k) p[k] = v[k];
    return p;
}

bool known_experiment(const std::string& e) {
    return e == "mms" || e == "strange-term" || e == "corrector" ||
           e == "compare-measures" || e == "example6-analytic";
}

std::string note_kv(const char* key, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s = %.6g", key, v);
    return buf;
}

void require_resolved(double eps, int n, double h) {
    double r_hole = std::pow(eps, double(n) / (n - 2));
    if (r_hole < 2.0 * h * (1.0 - 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "holes below mesh resolution: hole radius %.3g < 2h = %.3g; "
                      "refine the grid or use a larger eps",
                      r_hole, 2.0 * h);
        throw ConfigError(buf);
    }
}

int resolve_cells(const RunConfig& cfg, double eps, int cap) {
    const Domain dom = cfg.domain();
    if (cfg.grid > 0) return cfg.grid;
    if (cfg.h > 0.0) {
        int m = int(std::lround(dom.edge(0) / cfg.h));
        if (m < 2) throw ConfigError("h leaves fewer than 2 cells per axis");
        return m;
    }
    return perforated_grid_rule(dom, eps, cfg.dim, cap);
}

// Ellipticity bounds actually used: explicit config values win, otherwise the
// extremes of the phase values involved.
std::pair<double, double> bounds_for(const RunConfig& cfg, std::initializer_list<double> phases) {
    double lo = cfg.alpha > 0.0 ? cfg.alpha : std::min(phases);
    double hi = cfg.beta > 0.0 ? cfg.beta : std::max(phases);
    return {lo, hi};
}

CoefficientField make_phases(double pa, double pb, const PerforationLattice& lat, double alpha,
                             double beta) {
    if (pa == pb) return CoefficientField::constant(SymMat::identity(3, pa), alpha, beta);
    return CoefficientField::two_phase(pa, pb, lat, alpha, beta);
}

double rel_l2_gap(const NodalField& u, const NodalField& ref) {
    NodalField d = u;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= ref[i];
    double n = lumped_l2_norm(ref);
    double g = lumped_l2_norm(d);
    return n > 0.0 ? g / n : g;
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig RunConfig::defaults(const std::string& experiment) {
    if (!known_experiment(experiment)) throw ConfigError("unknown experiment: " + experiment);
    RunConfig c;
    c.experiment = experiment;
    if (experiment == "mms") {
        c.dim = 2;
        c.grid = 16;
    } else if (experiment == "strange-term") {
        c.eps_list = {1.0 / 2, 1.0 / 3, 1.0 / 4};
    } else if (experiment == "corrector") {
        c.dim = 2;
        c.eps_list = {1.0 / 4, 1.0 / 8, 1.0 / 16};
        c.b = 4.0;  // grid stays 0: laminate picks 256, perforated the hole rule
    } else if (experiment == "compare-measures") {
        c.eps_list = {1.0 / 3};
    } else if (experiment == "example6-analytic") {
        c.eps_list = {1.0 / 8, 1.0 / 16};
        c.gamma = 1.5;
    }
    return c;
}

RunConfig RunConfig::parse_file(const std::string& path, const std::string& experiment) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    RunConfig cfg = defaults(experiment);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) + ": empty key");
        cfg.apply(key, value);
    }
    if (cfg.experiment != experiment)
        throw ConfigError("config: file pins experiment '" + cfg.experiment + "' but '" +
                          experiment + "' was requested");
    return cfg;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "experiment") experiment = value;
    else if (key == "dim") dim = parse_int(key, value);
    else if (key == "lower") lower = parse_point(key, value);
    else if (key == "upper") upper = parse_point(key, value);
    else if (key == "eps_list") eps_list = parse_list(key, value);
    else if (key == "gamma") gamma = parse_double(key, value);
    else if (key == "a") a = parse_double(key, value);
    else if (key == "b") b = parse_double(key, value);
    else if (key == "a2") a2 = parse_double(key, value);
    else if (key == "b2") b2 = parse_double(key, value);
    else if (key == "alpha") alpha = parse_double(key, value);
    else if (key == "beta") beta = parse_double(key, value);
    else if (key == "grid") grid = parse_int(key, value);
    else if (key == "h") h = parse_double(key, value);
    else if (key == "rel_tol") rel_tol = parse_double(key, value);
    else if (key == "max_iter") max_iter = parse_int(key, value);
    else if (key == "preconditioner") preconditioner = value;
    else if (key == "window") window = parse_double(key, value);
    else if (key == "floor") floor = parse_double(key, value);
    else if (key == "density") density = parse_double(key, value);
    else if (key == "theta") theta = parse_double(key, value);
    else if (key == "radius") radius = parse_double(key, value);
    else if (key == "case") case_name = value;
    else if (key == "output_dir") output_dir = value;
    else if (key == "tol") tol = parse_double(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::validate() const {
    if (!known_experiment(experiment)) throw ConfigError("unknown experiment: " + experiment);
    if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
    for (int k = 0; k < dim; ++k)
        if (!(upper[k] > lower[k])) throw ConfigError("domain: upper must exceed lower");
    double e0 = upper[0] - lower[0];
    for (int k = 1; k < dim; ++k)
        if (std::abs((upper[k] - lower[k]) - e0) > 1e-12 * e0)
            throw ConfigError("domain must be a cube (equal edges; one h serves every axis)");

    if (experiment != "mms") {
        if (eps_list.empty()) throw ConfigError("eps_list must not be empty");
        for (double e : eps_list)
            if (!(e > 0.0 && e < 1.0)) throw ConfigError("eps values must lie in (0, 1)");
        for (std::size_t i = 1; i < eps_list.size(); ++i)
            if (!(eps_list[i] < eps_list[i - 1]))
                throw ConfigError("eps_list must be strictly decreasing");
    }

    bool lattice = experiment == "strange-term" || experiment == "compare-measures" ||
                   experiment == "example6-analytic" ||
                   (experiment == "corrector" && case_name == "perforated");
    if (lattice) {
        if (dim != 3) throw ConfigError(experiment + " asks for dim = 3");
        if (!(gamma > 1.0 && gamma < 3.0))
            throw ConfigError("gamma must lie in (1, 3) for spherical perforations");
    }
    if (experiment == "corrector") {
        if (case_name != "laminate" && case_name != "perforated")
            throw ConfigError("case must be laminate or perforated");
        if (case_name == "laminate" && dim != 2)
            throw ConfigError("corrector case laminate asks for dim = 2");
    }

    if (!(a > 0.0) || !(b > 0.0) || !(a2 > 0.0) || !(b2 > 0.0))
        throw ConfigError("phase values a, b, a2, b2 must be > 0");
    if (alpha != 0.0 || beta != 0.0)
        if (!(alpha > 0.0) || !(beta >= alpha))
            throw ConfigError("need 0 < alpha <= beta (or leave both 0 to derive them)");
    if (grid < 0 || grid == 1) throw ConfigError("grid must be 0 (rule) or at least 2");
    if (h < 0.0) throw ConfigError("h must be >= 0");
    if (grid > 0 && h > 0.0) throw ConfigError("give grid or h, not both");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ConfigError("rel_tol must lie in (0, 1)");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (preconditioner != "jacobi" && preconditioner != "none")
        throw ConfigError("preconditioner must be jacobi or none");
    if (!(window > 0.0)) throw ConfigError("window must be > 0");
    if (!(floor > 0.0)) throw ConfigError("floor must be > 0");
    if (density < 0.0) throw ConfigError("density must be >= 0");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    if (radius < 0.0) throw ConfigError("radius must be >= 0");
    if (tol < 0.0) throw ConfigError("tol must be >= 0");
}

SolverParams RunConfig::solver() const {
    SolverParams p;
    p.rel_tol = rel_tol;
    p.max_iter = max_iter;
    p.precond = preconditioner == "none" ? SolverParams::Precond::none
                                         : SolverParams::Precond::jacobi;
    return p;
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    auto num = [&](const char* key, double v) { out << key << " = " << format_g17(v) << "\n"; };
    out << "experiment = " << experiment << "\n";
    out << "dim = " << dim << "\n";
    auto point = [&](const char* key, const Vec3& v) {
        out << key << " =";
        for (int k = 0; k < dim; ++k) out << ' ' << format_g17(v[k]);
        out << "\n";
    };
    point("lower", lower);
    point("upper", upper);
    out << "eps_list =";
    for (double e : eps_list) out << ' ' << format_g17(e);
    out << "\n";
    num("gamma", gamma);
    num("a", a);
    num("b", b);
    num("a2", a2);
    num("b2", b2);
    num("alpha", alpha);
    num("beta", beta);
    out << "grid = " << grid << "\n";
    num("h", h);
    num("rel_tol", rel_tol);
    out << "max_iter = " << max_iter << "\n";
    out << "preconditioner = " << preconditioner << "\n";
    num("window", window);
    num("floor", floor);
    num("density", density);
    num("theta", theta);
    num("radius", radius);
    out << "case = " << case_name << "\n";
    // output_dir is bookkeeping, not run identity: two runs differing only in
    // where they write must share the hash (and hence byte-identical csv rows)
    num("tol", tol);
    return out.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

// ---------------------------------------------------------------------------
// Helpers

double fit_rate(std::span<const double> hs, std::span<const double> errs) {
    if (hs.size() != errs.size() || hs.size() < 2)
        throw std::invalid_argument("fit_rate: need two or more (h, err) pairs");
    std::size_t n = hs.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(hs[i] > 0.0) || !(errs[i] > 0.0))
            throw std::invalid_argument("fit_rate: h and err must be positive");
        xs[i] = std::log(hs[i]);
        ys[i] = std::log(errs[i]);
    }
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= double(n);
    ybar /= double(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: all h equal");
    return sxy / sxx;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {
double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}
} // namespace

double bump_phi(const Domain& box, const Vec3& x) {
    const double w = 0.125;
    double out = 1.0;
    for (int k = 0; k < box.dim; ++k) {
        double t = (x[k] - box.lower[k]) / box.edge(k);
        out *= smoothstep((t - (0.25 - w / 2)) / w) * smoothstep(((0.75 + w / 2) - t) / w);
    }
    return out;
}

double bump_integral(const Domain& box) { return box.volume() * std::pow(0.5, box.dim); }

int perforated_grid_rule(const Domain& domain, double eps, int n, int cap) {
    if (!(eps > 0.0) || n < 3) throw std::invalid_argument("perforated_grid_rule: eps > 0, n >= 3");
    int m = int(std::lround(32.0 * domain.edge(0) / eps));
    m = std::clamp(m, 2, cap);
    require_resolved(eps, n, domain.edge(0) / m);
    return m;
}

// ---------------------------------------------------------------------------
// Runners

Report run_mms(const RunConfig& cfg) {
    const Domain dom = cfg.domain();
    const int dim = cfg.dim;
    int m0 = cfg.grid > 0 ? cfg.grid
                          : (cfg.h > 0.0 ? int(std::lround(dom.edge(0) / cfg.h)) : 16);
    if (m0 < 2) throw ConfigError("mms wants a base grid of at least 2 cells");

    std::array<double, 3> freq{};
    double stiff = 0.0;
    for (int k = 0; k < dim; ++k) {
        freq[k] = kPi / dom.edge(k);
        stiff += cfg.a * freq[k] * freq[k];
    }
    const double react = cfg.density;
    auto exact = [&](const Vec3& x) {
        double v = 1.0;
        for (int k = 0; k < dim; ++k) v *= std::sin(freq[k] * (x[k] - dom.lower[k]));
        return v;
    };
    auto exact_grad = [&](const Vec3& x) {
        Vec3 g{};
        for (int k = 0; k < dim; ++k) {
            double p = freq[k] * std::cos(freq[k] * (x[k] - dom.lower[k]));
            for (int l = 0; l < dim; ++l)
                if (l != k) p *= std::sin(freq[l] * (x[l] - dom.lower[l]));
            g[k] = p;
        }
        return g;
    };

    CoefficientField A = CoefficientField::constant(SymMat::identity(dim, cfg.a), cfg.a, cfg.a);
    MeasureSpec mu = react > 0.0 ? MeasureSpec::constant_density(react) : MeasureSpec::zero();

    Report rep;
    rep.columns = {"level",  "h",      "dofs",    "iterations", "converged",
                   "l2_err", "h1_err", "l2_rate", "h1_rate"};
    std::vector<double> hs, l2s, h1s;
    bool converged = true;
    for (int l = 0; l < 4; ++l) {
        int m = m0 << l;
        MeshPtr mesh = build_mesh(dom, dom.edge(0) / m);
        NodalField f = NodalField::from_function(
            mesh, [&](const Vec3& x) { return (stiff + react) * exact(x); });
        SolveInfo info;
        NodalField u = solve_relaxed(A, mu, Load::of(std::move(f)), mesh, cfg.solver(), &info);
        auto [h1, l2] = h1_l2_errors(u, exact, exact_grad);
        converged = converged && info.converged;
        double l2_rate = hs.empty() ? 0.0 : std::log2(l2s.back() / l2);
        double h1_rate = hs.empty() ? 0.0 : std::log2(h1s.back() / h1);
        hs.push_back(mesh->h);
        l2s.push_back(l2);
        h1s.push_back(h1);
        rep.rows.push_back({double(l), mesh->h, double(mesh->node_count()),
                            double(info.iterations), info.converged ? 1.0 : 0.0, l2, h1,
                            l2_rate, h1_rate});
    }
    double l2_fit = fit_rate(hs, l2s);
    double h1_fit = fit_rate(hs, h1s);
    rep.notes.push_back(note_kv("fitted_l2_rate", l2_fit));
    rep.notes.push_back(note_kv("fitted_h1_rate", h1_fit));
    rep.pass = converged && l2_fit >= 1.8 && l2_fit <= 2.2 && h1_fit >= 0.8 && h1_fit <= 1.2;
    if (!rep.pass) rep.notes.push_back("convergence rates missed the expected bands");
    return rep;
}

Report run_strange_term(const RunConfig& cfg) {
    const Domain dom = cfg.domain();
    const double mu_pred = mu0_prediction(cfg.b, 3);
    auto [alo, ahi] = bounds_for(cfg, {cfg.a, cfg.b});

    Report rep;
    rep.columns = {"eps",        "cells",       "hole_nodes",       "iterations",
                   "converged",  "window",      "windows",          "interior_windows",
                   "saturated",  "mu_interior", "mu_interior_std",  "mu_prediction",
                   "rel_dev",    "total_mass",  "nu_total",         "u0_gap",
                   "window_flagged"};
    bool converged = true;
    std::vector<double> gaps, devs;
    for (double eps : cfg.eps_list) {
        int m = resolve_cells(cfg, eps, 128);
        double h = dom.edge(0) / m;
        require_resolved(eps, 3, h);
        PerforationLattice lat = PerforationLattice::cubic(eps, 3, cfg.gamma);
        MeshPtr mesh = classify_holes(build_mesh(dom, h), lat);
        CoefficientField A = make_phases(cfg.a, cfg.b, lat, alo, ahi);
        PerforatedSolve ps =
            solve_perforated_unit(A, MeasureSpec::hole_dirichlet(lat), mesh, cfg.solver());
        double window_eff = std::max(cfg.window, eps);
        StrangeTermEstimate est = extract_strange_term(ps.nu, ps.w, eps, window_eff, cfg.floor);

        CoefficientField A0 =
            CoefficientField::constant(SymMat::identity(3, cfg.a), alo, ahi);
        SolveInfo info0;
        NodalField u0 = solve_relaxed(A0, MeasureSpec::constant_density(mu_pred),
                                      Load::uniform(mesh, 1.0), mesh, cfg.solver(), &info0);
        double gap = rel_l2_gap(ps.w, u0);
        double rel_dev = est.interior_mean / mu_pred - 1.0;
        double sat = 0.0;
        for (std::uint8_t s : est.saturated) sat += s;
        double nu_total = pairwise_sum(est.nu_sum);
        bool conv = ps.info.converged && info0.converged;
        converged = converged && conv;
        gaps.push_back(gap);
        devs.push_back(rel_dev);
        rep.rows.push_back({eps, double(m), double(count_class(*mesh, NodeClass::hole_interior)),
                            double(ps.info.iterations), conv ? 1.0 : 0.0, window_eff,
                            double(est.window_count()), double(est.interior_count), sat,
                            est.interior_mean, est.interior_std, mu_pred, rel_dev,
                            est.total_mass, nu_total, gap, est.window_flagged ? 1.0 : 0.0});
    }
    rep.notes.push_back(note_kv("final_rel_dev", devs.back()));
    rep.notes.push_back(note_kv("final_u0_gap", gaps.back()));
    bool dev_ok = std::abs(devs.back()) <= 0.30;
    bool trend_ok = gaps.size() < 2 || gaps.back() < gaps.front();
    rep.pass = converged && dev_ok && trend_ok;
    if (!dev_ok)
        rep.notes.push_back("coarse-grained reaction density misses the prediction band (30%)");
    if (!trend_ok) rep.notes.push_back("distance to the limit solution does not shrink");
    return rep;
}

namespace {

Report corrector_laminate(const RunConfig& cfg) {
    const Domain dom = cfg.domain();
    int m = cfg.grid > 0 ? cfg.grid
                         : (cfg.h > 0.0 ? int(std::lround(dom.edge(0) / cfg.h)) : 256);
    if (m < 2) throw ConfigError("corrector wants a grid of at least 2 cells");
    double h = dom.edge(0) / m;
    MeshPtr mesh = build_mesh(dom, h);

    std::vector<std::pair<double, double>> profile{{0.5, cfg.a}, {0.5, cfg.b}};
    auto [alo, ahi] = bounds_for(cfg, {cfg.a, cfg.b});
    SymMat H = laminate_h_limit(2, 0, profile);
    CoefficientField A0 = CoefficientField::constant(H, alo, ahi);

    SolveInfo info0;
    NodalField u0 = solve_relaxed(A0, MeasureSpec::zero(), Load::uniform(mesh, 1.0), mesh,
                                  cfg.solver(), &info0);
    NodalField omega0(mesh, 1.0);
    NodalField psi = choose_smooth_profile(u0, omega0, cfg.theta, cfg.radius);
    double defect = profile_defect(psi, u0, omega0, ahi, MeasureSpec::zero());

    Report rep;
    rep.columns = {"eps",    "h",          "flux0",          "flux1", "h_limit_00",
                   "h_limit_11", "z0_sup", "z1_sup",         "err_plain", "err_corrector",
                   "ratio",  "profile_defect", "iterations", "converged"};
    bool converged = info0.converged;
    double last_ratio = std::numeric_limits<double>::infinity();
    // Corrector cell on the domain itself: the box is an integer number of
    // periods for every eps used here, so enlarging it only adds an artificial
    // boundary ring that pollutes the aligned flux entry.
    MeshPtr emesh = mesh;
    for (double eps : cfg.eps_list) {
        CoefficientField A_eps = CoefficientField::laminate(2, 0, eps, profile, alo, ahi);
        SolveInfo infoe;
        NodalField u_eps = solve_relaxed(A_eps, MeasureSpec::zero(), Load::uniform(mesh, 1.0),
                                         mesh, cfg.solver(), &infoe);
        CoefficientField A_ext = CoefficientField::extended(A_eps, dom, alo);
        CorrectorSet cs{eps, {}};
        double flux[2] = {0.0, 0.0}, sup[2] = {0.0, 0.0};
        bool zconv = true;
        for (int j = 0; j < 2; ++j) {
            CorrectorZ zj = solve_corrector_z(A_ext, A0, j, emesh, dom, cfg.solver());
            flux[j] = zj.flux_entry;
            sup[j] = zj.sup_norm;
            zconv = zconv && zj.info.converged;
            cs.z.push_back(resample(zj.z, mesh));
        }
        NodalField v = build_corrector(psi, cs, omega0);
        NodalField vplain = build_corrector(psi, CorrectorSet{eps, {}}, omega0);
        auto [e_corr, m_corr] = corrector_error(u_eps, v, A_eps, MeasureSpec::zero());
        auto [e_plain, m_plain] = corrector_error(u_eps, vplain, A_eps, MeasureSpec::zero());
        (void)m_corr;
        (void)m_plain;
        double ratio = e_plain > 0.0 ? e_corr / e_plain : 0.0;
        bool conv = infoe.converged && zconv;
        converged = converged && conv;
        last_ratio = ratio;
        rep.rows.push_back({eps, h, flux[0], flux[1], H.m[0][0], H.m[1][1], sup[0], sup[1],
                            e_plain, e_corr, ratio, defect, double(infoe.iterations),
                            conv ? 1.0 : 0.0});
    }
    rep.notes.push_back(note_kv("final_energy_ratio", last_ratio));
    rep.pass = converged && last_ratio <= 0.5;
    if (!(last_ratio <= 0.5))
        rep.notes.push_back("corrector fails to halve the energy error at the finest eps");
    return rep;
}

Report corrector_perforated(const RunConfig& cfg) {
    const Domain dom = cfg.domain();
    const double mu_pred = mu0_prediction(cfg.b, 3);
    auto [alo, ahi] = bounds_for(cfg, {cfg.a, cfg.b});

    Vec3 ilo = dom.lower, ihi = dom.upper;
    for (int k = 0; k < 3; ++k) {
        double e = dom.edge(k);
        ilo[k] += 0.25 * e;
        ihi[k] -= 0.25 * e;
    }
    Domain inner = Domain::box(3, ilo, ihi);

    Report rep;
    rep.columns = {"eps",           "cells",         "hole_nodes",     "err_plain_inner",
                   "err_corrector_inner", "ratio_inner", "err_corrector_full",
                   "mass_corrector", "mass_plain",    "profile_defect", "iterations",
                   "converged"};
    bool converged = true;
    double last_ratio = std::numeric_limits<double>::infinity();
    for (double eps : cfg.eps_list) {
        int m = resolve_cells(cfg, eps, 128);
        double h = dom.edge(0) / m;
        require_resolved(eps, 3, h);
        PerforationLattice lat = PerforationLattice::cubic(eps, 3, cfg.gamma);
        MeshPtr mesh = classify_holes(build_mesh(dom, h), lat);
        CoefficientField A = make_phases(cfg.a, cfg.b, lat, alo, ahi);
        MeasureSpec holes = MeasureSpec::hole_dirichlet(lat);
        PerforatedSolve ps = solve_perforated_unit(A, holes, mesh, cfg.solver());

        CoefficientField A0 =
            CoefficientField::constant(SymMat::identity(3, cfg.a), alo, ahi);
        SolveInfo info0;
        NodalField u0 = solve_relaxed(A0, MeasureSpec::constant_density(mu_pred),
                                      Load::uniform(mesh, 1.0), mesh, cfg.solver(), &info0);
        NodalField omega0(mesh, 1.0);
        NodalField psi = choose_smooth_profile(u0, omega0, cfg.theta, cfg.radius);
        double defect =
            profile_defect(psi, u0, omega0, ahi, MeasureSpec::constant_density(mu_pred));
        NodalField omega_eps = shell_field(lat, mesh);
        NodalField v = build_corrector(psi, CorrectorSet{eps, {}}, omega_eps);
        NodalField vplain = build_corrector(psi, CorrectorSet{eps, {}}, omega0);

        auto [ec_full, mc_full] = corrector_error(ps.w, v, A, holes);
        auto [ec_in, mc_in] = corrector_error(ps.w, v, A, holes, inner);
        auto [ep_in, mp_in] = corrector_error(ps.w, vplain, A, holes, inner);
        auto [ep_full, mp_full] = corrector_error(ps.w, vplain, A, holes);
        (void)ep_full;
        (void)mc_in;
        (void)mp_in;
        double ratio = ep_in > 0.0 ? ec_in / ep_in : 0.0;
        bool conv = ps.info.converged && info0.converged;
        converged = converged && conv;
        last_ratio = ratio;
        rep.rows.push_back({eps, double(m), double(count_class(*mesh, NodeClass::hole_interior)),
                            ep_in, ec_in, ratio, ec_full, mc_full, mp_full, defect,
                            double(ps.info.iterations), conv ? 1.0 : 0.0});
    }
    rep.notes.push_back(note_kv("final_inner_ratio", last_ratio));
    rep.pass = converged && last_ratio < 1.0;
    if (!(last_ratio < 1.0))
        rep.notes.push_back("oscillating profile does not improve the interior energy error");
    return rep;
}

} // namespace

Report run_corrector(const RunConfig& cfg) {
    return cfg.case_name == "laminate" ? corrector_laminate(cfg) : corrector_perforated(cfg);
}

Report run_compare_measures(const RunConfig& cfg) {
    const Domain dom = cfg.domain();
    auto [alo, ahi] = bounds_for(cfg, {cfg.a, cfg.b, cfg.a2, cfg.b2});

    Report rep;
    rep.columns = {"eps",       "cells",      "mu1_interior", "mu2_interior", "ratio",
                   "ratio_pred", "band_lo",   "band_hi",      "checked",      "failed",
                   "worst_ratio", "band_pass", "saturated1",  "saturated2",   "iterations1",
                   "iterations2", "converged"};
    bool all_pass = true;
    double last_ratio = 0.0;
    for (double eps : cfg.eps_list) {
        int m = resolve_cells(cfg, eps, 128);
        double h = dom.edge(0) / m;
        require_resolved(eps, 3, h);
        PerforationLattice lat = PerforationLattice::cubic(eps, 3, cfg.gamma);
        MeshPtr mesh = classify_holes(build_mesh(dom, h), lat);
        MeasureSpec holes = MeasureSpec::hole_dirichlet(lat);
        CoefficientField A1 = make_phases(cfg.a, cfg.b, lat, alo, ahi);
        CoefficientField A2 = make_phases(cfg.a2, cfg.b2, lat, alo, ahi);
        PerforatedSolve ps1 = solve_perforated_unit(A1, holes, mesh, cfg.solver());
        PerforatedSolve ps2 = solve_perforated_unit(A2, holes, mesh, cfg.solver());
        double window_eff = std::max(cfg.window, eps);
        StrangeTermEstimate est1 = extract_strange_term(ps1.nu, ps1.w, eps, window_eff, cfg.floor);
        StrangeTermEstimate est2 = extract_strange_term(ps2.nu, ps2.w, eps, window_eff, cfg.floor);

        std::vector<double> m1, m2;
        double sat1 = 0.0, sat2 = 0.0;
        for (std::size_t iw = 0; iw < est1.window_count(); ++iw) {
            sat1 += est1.saturated[iw];
            sat2 += est2.saturated[iw];
            if (!est1.saturated[iw] && !est2.saturated[iw]) {
                m1.push_back(est1.mu_hat[iw]);
                m2.push_back(est2.mu_hat[iw]);
            }
        }
        ComparisonReport cr = comparison_bounds_check(m1, m2, alo, ahi, cfg.tol);
        double ratio = est1.interior_mean > 0.0 ? est2.interior_mean / est1.interior_mean : 0.0;
        double ratio_pred = cfg.b2 / cfg.b;
        bool conv = ps1.info.converged && ps2.info.converged;
        all_pass = all_pass && cr.pass && conv;
        last_ratio = ratio;
        rep.rows.push_back({eps, double(m), est1.interior_mean, est2.interior_mean, ratio,
                            ratio_pred, (alo * alo) / (ahi * ahi), (ahi * ahi) / (alo * alo),
                            double(cr.n_checked), double(cr.n_failed), cr.worst_ratio,
                            cr.pass ? 1.0 : 0.0, sat1, sat2, double(ps1.info.iterations),
                            double(ps2.info.iterations), conv ? 1.0 : 0.0});
    }
    rep.notes.push_back(note_kv("final_ratio", last_ratio));
    rep.notes.push_back(note_kv("ratio_pred", cfg.b2 / cfg.b));
    rep.pass = all_pass;
    if (!all_pass) rep.notes.push_back("comparison band violated on some window");
    return rep;
}

Report run_example6_analytic(const RunConfig& cfg) {
    const Domain dom = cfg.domain();
    const double mu_pred = mu0_prediction(cfg.b, 3);
    const std::size_t direct_cap = 300000;  // materialize centers only below this

    Report rep;
    rep.columns = {"eps",      "c_eps",       "centers",    "cell_energy", "quad_rel_err",
                   "lambda_ones", "ones_dev", "torus_dev",  "bump_done",   "lambda_bump",
                   "bump_dev", "bound_done",  "bound_interior", "bound_total", "bound_ok"};
    bool pass = true;
    bool bump_any = false;
    double last_bump_dev = 0.0, last_torus_dev = 0.0;
    for (double eps : cfg.eps_list) {
        PerforationLattice lat = PerforationLattice::cubic(eps, 3, cfg.gamma);
        std::size_t N = lattice_center_count(lat, dom);
        double c = c_eps(eps, 3, cfg.gamma);
        RadialCell cell = RadialCell::make(eps, 3, cfg.gamma);
        double e_closed = cell_energy_closed_form(eps, 3, cfg.gamma);
        double e_quad = cell_energy_quadrature(cell, 4096);
        double quad_rel = std::abs(e_quad / e_closed - 1.0);

        double lam_ones = sphere_measure_pairing_ones(lat, dom, cfg.b);
        double ones_dev = lam_ones / (mu_pred * dom.volume()) - 1.0;
        double torus_dev = c - 1.0;

        double bump_done = 0.0, lam_bump = 0.0, bump_dev = 0.0;
        double bound_done = 0.0, b_lhs = 0.0, b_rhs = 0.0, bound_ok = 1.0;
        if (N <= direct_cap) {
            lam_bump = sphere_measure_pairing(
                lat, dom, [&](const Vec3& x) { return bump_phi(dom, x); }, cfg.b, 200, true);
            bump_dev = lam_bump / (mu_pred * bump_integral(dom)) - 1.0;
            bump_done = 1.0;
            bump_any = true;
            last_bump_dev = bump_dev;

            EnergyBound eb = energy_bound_check(lat, dom);
            b_lhs = eb.interior_lhs;
            b_rhs = eb.rhs;
            bound_ok = b_lhs <= b_rhs * (1.0 + 1e-12) ? 1.0 : 0.0;
            bound_done = 1.0;
            pass = pass && bound_ok == 1.0;
        }
        pass = pass && quad_rel <= 1e-5;
        last_torus_dev = torus_dev;
        rep.rows.push_back({eps, c, double(N), e_closed, quad_rel, lam_ones, ones_dev,
                            torus_dev, bump_done, lam_bump, bump_dev, bound_done, b_lhs,
                            b_rhs, bound_ok});
    }
    if (bump_any) {
        pass = pass && std::abs(last_bump_dev) <= 0.05;
        rep.notes.push_back(note_kv("final_bump_dev", last_bump_dev));
    }
    pass = pass && std::abs(last_torus_dev) <= 0.02;
    rep.notes.push_back(note_kv("final_torus_dev", last_torus_dev));
    rep.pass = pass;
    if (!pass)
        rep.notes.push_back(
            "an analytic identity failed or the asymptotic regime is not reached");
    return rep;
}

Report run_experiment(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.experiment == "mms") return run_mms(cfg);
    if (cfg.experiment == "strange-term") return run_strange_term(cfg);
    if (cfg.experiment == "corrector") return run_corrector(cfg);
    if (cfg.experiment == "compare-measures") return run_compare_measures(cfg);
    if (cfg.experiment == "example6-analytic") return run_example6_analytic(cfg);
    throw ConfigError("unknown experiment: " + cfg.experiment);
}

// ---------------------------------------------------------------------------
// Output

void write_report(const RunConfig& cfg, const Report& rep, double wall_ms) {
    namespace fs = std::filesystem;
    for (const auto& row : rep.rows)
        if (row.size() != rep.columns.size())
            throw std::logic_error("write_report: row width does not match the column list");
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw ConfigError("cannot create output_dir " + cfg.output_dir);
    const std::string hash = hash_hex(cfg.hash());
    const fs::path base(cfg.output_dir);

    {
        std::ofstream out(base / "report.csv");
        if (!out) throw ConfigError("cannot write report.csv in " + cfg.output_dir);
        for (const auto& col : rep.columns) out << col << ',';
        out << "config_hash\n";
        for (const auto& row : rep.rows) {
            for (double v : row) out << format_g17(v) << ',';
            out << hash << "\n";
        }
    }
    {
        nlohmann::json j;
        j["experiment"] = cfg.experiment;
        j["config_hash"] = hash;
        j["config"] = cfg.canonical();
        j["columns"] = rep.columns;
        j["rows"] = rep.rows;
        j["pass"] = rep.pass;
        j["notes"] = rep.notes;
        std::ofstream out(base / "report.json");
        if (!out) throw ConfigError("cannot write report.json in " + cfg.output_dir);
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(base / "meta.txt");
        if (!out) throw ConfigError("cannot write meta.txt in " + cfg.output_dir);
        out << "experiment = " << cfg.experiment << "\n";
        out << "config_hash = " << hash << "\n";
        out << "pass = " << (rep.pass ? 1 : 0) << "\n";
        out << "rows = " << rep.rows.size() << "\n";
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.1f", wall_ms);
        out << "wall_ms = " << buf << "\n";
        for (const auto& note : rep.notes) out << "note = " << note << "\n";
    }
    {
        std::ofstream out(base / "config.txt");
        if (!out) throw ConfigError("cannot write config.txt in " + cfg.output_dir);
        out << cfg.canonical();
    }
}

} // namespace perfhom
