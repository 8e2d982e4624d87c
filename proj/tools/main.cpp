#include "perfhom/experiment.hpp"

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <string>

using perfhom::RunConfig;

namespace {

struct Overrides {
    CLI::App* cmd = nullptr;
    std::string config_path, out_dir, eps_csv, case_name;
    int grid = 0, dim = 0;
    double a = 0, b = 0, alpha = 0, beta = 0, gamma = 0, window = 0, tol = 0, h = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
    o.cmd = cmd;
    cmd->add_option("--config", o.config_path, "key = value config file");
    cmd->add_option("--out", o.out_dir, "output directory (default out/)");
    cmd->add_option("--eps", o.eps_csv, "comma-separated eps list, strictly decreasing");
    cmd->add_option("--grid", o.grid, "cells per axis (0 = per-experiment rule)");
    cmd->add_option("--step", o.h, "mesh step h, alternative to --grid");
    cmd->add_option("--dim", o.dim, "space dimension (2 or 3)");
    cmd->add_option("--a", o.a, "background phase value");
    cmd->add_option("--b", o.b, "shell phase value");
    cmd->add_option("--alpha", o.alpha, "ellipticity lower bound (0 = derive)");
    cmd->add_option("--beta", o.beta, "ellipticity upper bound (0 = derive)");
    cmd->add_option("--gamma", o.gamma, "shell radius exponent");
    cmd->add_option("--window", o.window, "coarse-graining window length");
    cmd->add_option("--tol", o.tol, "slack for comparison-band checks");
    cmd->add_option("--case", o.case_name, "corrector case: laminate | perforated");
}

int run_one(const std::string& experiment, const Overrides& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig::defaults(experiment)
                                          : RunConfig::parse_file(o.config_path, experiment);
    auto passed = [&](const char* name) { return o.cmd->count(name) > 0; };
    if (passed("--out")) cfg.output_dir = o.out_dir;
    if (passed("--eps")) cfg.apply("eps_list", o.eps_csv);
    if (passed("--grid") && passed("--step"))
        throw perfhom::ConfigError("give --grid or --step, not both");
    if (passed("--grid")) {
        cfg.grid = o.grid;
        cfg.h = 0.0;
    }
    if (passed("--step")) {
        cfg.h = o.h;
        cfg.grid = 0;
    }
    if (passed("--dim")) cfg.dim = o.dim;
    if (passed("--a")) cfg.a = o.a;
    if (passed("--b")) cfg.b = o.b;
    if (passed("--alpha")) cfg.alpha = o.alpha;
    if (passed("--beta")) cfg.beta = o.beta;
    if (passed("--gamma")) cfg.gamma = o.gamma;
    if (passed("--window")) cfg.window = o.window;
    if (passed("--tol")) cfg.tol = o.tol;
    if (passed("--case")) cfg.case_name = o.case_name;
    cfg.validate();

    auto t0 = std::chrono::steady_clock::now();
    perfhom::Report rep = perfhom::run_experiment(cfg);
    double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    perfhom::write_report(cfg, rep, wall_ms);

    std::printf("%s: %s (%zu rows) -> %s\n", experiment.c_str(), rep.pass ? "pass" : "FAIL",
                rep.rows.size(), cfg.output_dir.c_str());
    for (const auto& note : rep.notes) std::printf("  %s\n", note.c_str());
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical lab for elliptic problems on finely perforated domains"};
    app.require_subcommand(1);

    const std::array<const char*, 5> names = {"mms", "strange-term", "corrector",
                                              "compare-measures", "example6-analytic"};
    const std::array<const char*, 5> descs = {
        "manufactured-solution convergence study",
        "extract the coarse-grained reaction density from perforated solves",
        "build oscillating correctors and measure the energy error they remove",
        "compare reaction densities of two coefficient setups against the bounds",
        "closed-form lattice checks: cell energies and boundary-layer pairings"};
    std::array<Overrides, 5> ov;
    for (std::size_t i = 0; i < names.size(); ++i)
        add_common(app.add_subcommand(names[i], descs[i]), ov[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    int which = -1;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (ov[i].cmd->parsed()) which = int(i);
    if (which < 0) {
        std::fprintf(stderr, "no experiment selected\n");
        return 2;
    }
    try {
        return run_one(names[which], ov[which]);
    } catch (const perfhom::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return 1;
    }
}
