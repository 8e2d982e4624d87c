#pragma once

#include "perfhom/homogenize.hpp"
#include "perfhom/radial_cell.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace perfhom {

// Configuration or resolution problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat run configuration. Config files are `key = value` lines (UTF-8, '#'
// comments); keys are exactly the field names below; unknown keys are errors.
// Fully deterministic: no seeds anywhere.
struct RunConfig {
    std::string experiment;  // mms | strange-term | corrector | compare-measures | example6-analytic
    int dim = 3;
    Vec3 lower{0.0, 0.0, 0.0};
    Vec3 upper{1.0, 1.0, 1.0};
    std::vector<double> eps_list;    // strictly decreasing
    double gamma = 2.0;
    double a = 1.0, b = 1.0;         // baseline coefficient phases
    double a2 = 1.0, b2 = 2.0;       // second setup (compare-measures)
    double alpha = 0.0, beta = 0.0;  // ellipticity bounds; 0 = derive from phases
    int grid = 0;                    // cells per axis; 0 = experiment rule
    double h = 0.0;                  // mesh step alternative to grid (0 = unused)
    double rel_tol = 1e-8;
    int max_iter = 50000;
    std::string preconditioner = "jacobi";  // jacobi | none
    double window = 0.25;            // coarse-graining length (clamped up to eps)
    double floor = 0.01;             // saturation floor for the w-average
    double density = 4.0;            // constant measure density (mms)
    double theta = 0.05;             // profile floor for psi = u0 / max(omega0, theta)
    double radius = 0.0;             // box-filter radius for psi
    std::string case_name = "laminate";  // corrector: laminate | perforated (key: case)
    std::string output_dir = "out";
    double tol = 0.10;               // slack for comparison-band checks

    // Defaults appropriate to one experiment (dim, eps_list, gamma, ...).
    static RunConfig defaults(const std::string& experiment);
    // defaults(experiment) overlaid with the file's key = value lines.
    static RunConfig parse_file(const std::string& path, const std::string& experiment);

    void apply(const std::string& key, const std::string& value);
    void validate() const;

    Domain domain() const { return Domain::box(dim, lower, upper); }
    SolverParams solver() const;

    // Canonical serialization (fixed key order, 17 significant digits);
    // reparsing it reproduces the config bit for bit.
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a over canonical()
};

// One table per run: fixed numeric columns, one row per eps (or h). Pass/fail
// flags are numeric columns so every check is recomputable from the table.
struct Report {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    bool pass = true;
    std::vector<std::string> notes;
};

Report run_mms(const RunConfig& cfg);
Report run_strange_term(const RunConfig& cfg);
Report run_corrector(const RunConfig& cfg);
Report run_compare_measures(const RunConfig& cfg);
Report run_example6_analytic(const RunConfig& cfg);
// Dispatch on cfg.experiment.
Report run_experiment(const RunConfig& cfg);

// Writes report.csv, report.json, meta.txt, config.txt into cfg.output_dir.
// Wall time goes to meta.txt only, keeping csv/json bit-identical across runs.
void write_report(const RunConfig& cfg, const Report& rep, double wall_ms);

// ---------------------------------------------------------------------------
// Small shared helpers (exposed for tests)

// Least-squares slope of log(err) against log(h).
double fit_rate(std::span<const double> hs, std::span<const double> errs);

std::uint64_t fnv1a64(std::string_view s);
std::string format_g17(double x);

// Smoothstep product bump: on every axis, ramps of width edge/8 centered at
// the quarter points, plateau 1 in between, zero near the boundary.
double bump_phi(const Domain& box, const Vec3& x);
// Its exact integral: volume / 2^dim.
double bump_integral(const Domain& box);

// Cells per axis for a perforated 3D run: round(32 * edge / eps) capped at
// cap; throws ConfigError when the hole radius is under-resolved (< 2h).
int perforated_grid_rule(const Domain& domain, double eps, int n, int cap);

} // namespace perfhom
