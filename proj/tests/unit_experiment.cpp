#include "perfhom/experiment.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace perfhom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(bool(in));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& leaf) {
    fs::path dir = fs::path("test_tmp") / leaf;
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("experiment defaults validate") {
    for (const char* name :
         {"mms", "strange-term", "corrector", "compare-measures", "example6-analytic"}) {
        RunConfig cfg = RunConfig::defaults(name);
        CHECK_NOTHROW(cfg.validate());
    }
    CHECK_THROWS_AS(RunConfig::defaults("nope"), ConfigError);
}

TEST_CASE("config validation rejects bad values") {
    auto bad = [](const char* experiment, auto&& mutate) {
        RunConfig cfg = RunConfig::defaults(experiment);
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    };
    bad("mms", [](RunConfig& c) { c.dim = 4; });
    bad("mms", [](RunConfig& c) { c.upper = vec3(1.0, 2.0); });
    bad("mms", [](RunConfig& c) { c.upper = vec3(0.0, 1.0); });
    bad("strange-term", [](RunConfig& c) { c.eps_list = {}; });
    bad("strange-term", [](RunConfig& c) { c.eps_list = {0.25, 0.5}; });
    bad("strange-term", [](RunConfig& c) { c.eps_list = {1.0, 0.5}; });
    bad("strange-term", [](RunConfig& c) { c.gamma = 1.0; });
    bad("strange-term", [](RunConfig& c) { c.gamma = 3.0; });
    bad("strange-term", [](RunConfig& c) { c.dim = 2; });
    bad("corrector", [](RunConfig& c) { c.case_name = "weird"; });
    bad("corrector", [](RunConfig& c) { c.dim = 3; });           // laminate is 2d
    bad("corrector", [](RunConfig& c) { c.case_name = "perforated"; });  // needs dim 3
    bad("mms", [](RunConfig& c) { c.a = 0.0; });
    bad("mms", [](RunConfig& c) { c.alpha = 2.0; c.beta = 1.0; });
    bad("mms", [](RunConfig& c) { c.grid = 1; });
    bad("mms", [](RunConfig& c) { c.grid = -2; });
    bad("mms", [](RunConfig& c) { c.h = 0.1; });  // defaults already pin grid = 16
    bad("mms", [](RunConfig& c) { c.h = -0.1; });
    bad("mms", [](RunConfig& c) { c.rel_tol = 0.0; });
    bad("mms", [](RunConfig& c) { c.rel_tol = 1.5; });
    bad("mms", [](RunConfig& c) { c.max_iter = 0; });
    bad("mms", [](RunConfig& c) { c.preconditioner = "ilu"; });
    bad("mms", [](RunConfig& c) { c.window = 0.0; });
    bad("mms", [](RunConfig& c) { c.floor = 0.0; });
    bad("mms", [](RunConfig& c) { c.density = -1.0; });
    bad("mms", [](RunConfig& c) { c.theta = 0.0; });
    bad("mms", [](RunConfig& c) { c.radius = -1.0; });
    bad("mms", [](RunConfig& c) { c.tol = -0.5; });
    RunConfig cfg = RunConfig::defaults("mms");
    cfg.experiment = "nonsense";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config files parse with comments and overrides") {
    fs::path dir = scratch("parse");
    fs::path file = dir / "run.cfg";
    {
        std::ofstream out(file);
        out << "# comment line\n";
        out << "\n";
        out << "  eps_list = 0.5, 0.25   # inline comment\n";
        out << "gamma=1.75\n";
        out << "grid = 32\n";
        out << "output_dir = " << (dir / "out").string() << "\n";
    }
    RunConfig cfg = RunConfig::parse_file(file.string(), "strange-term");
    CHECK(cfg.eps_list.size() == 2);
    CHECK(cfg.eps_list[0] == doctest::Approx(0.5));
    CHECK(cfg.eps_list[1] == doctest::Approx(0.25));
    CHECK(cfg.gamma == doctest::Approx(1.75));
    CHECK(cfg.grid == 32);
    CHECK_NOTHROW(cfg.validate());

    auto write_and_parse = [&](const std::string& body, const char* experiment) {
        fs::path f = dir / "bad.cfg";
        std::ofstream out(f);
        out << body;
        out.close();
        return RunConfig::parse_file(f.string(), experiment);
    };
    CHECK_THROWS_AS(write_and_parse("grid = twelve\n", "mms"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("grid = 2.5\n", "mms"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("gamma = 1.5abc\n", "mms"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("mystery = 1\n", "mms"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("no equals sign\n", "mms"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("= 3\n", "mms"), ConfigError);
    CHECK_THROWS_AS(write_and_parse("experiment = mms\n", "strange-term"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_file((dir / "missing.cfg").string(), "mms"),
                    ConfigError);
}

TEST_CASE("canonical serialization round-trips bit for bit") {
    RunConfig cfg = RunConfig::defaults("strange-term");
    cfg.eps_list = {1.0 / 3, 1.0 / 7};
    cfg.gamma = 1.9;
    cfg.window = 0.3;
    cfg.rel_tol = 1e-9;
    std::string canon = cfg.canonical();

    fs::path dir = scratch("canon");
    fs::path file = dir / "canon.cfg";
    {
        std::ofstream out(file);
        out << canon;
    }
    RunConfig back = RunConfig::parse_file(file.string(), "strange-term");
    CHECK(back.canonical() == canon);
    CHECK(back.hash() == cfg.hash());

    RunConfig other = back;
    other.tol = 0.2;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("g17 formatting is lossless") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, 0.0, -2.5e17, 6.02e23}) {
        double y = std::stod(format_g17(x));
        CHECK(y == x);
    }
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("rate fitting") {
    std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
    std::vector<double> quad(hs.size()), flat(hs.size()), inv(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        quad[i] = 3.0 * hs[i] * hs[i];
        flat[i] = 0.5;
        inv[i] = 0.01 / hs[i];
    }
    CHECK(fit_rate(hs, quad) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit_rate(hs, flat) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit_rate(hs, inv) == doctest::Approx(-1.0).epsilon(1e-12));
    // the mms gate [1.8, 2.2] rejects a stalled and a diverging error series
    CHECK(std::abs(fit_rate(hs, flat) - 2.0) > 0.2);
    CHECK(std::abs(fit_rate(hs, inv) - 2.0) > 0.2);
    std::vector<double> one_h{0.5}, one_e{0.1};
    CHECK_THROWS_AS(fit_rate(one_h, one_e), std::invalid_argument);
    std::vector<double> zero_err{0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(fit_rate(hs, zero_err), std::invalid_argument);
    std::vector<double> same_h{0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(fit_rate(same_h, quad), std::invalid_argument);
}

TEST_CASE("bump profile") {
    Domain box = Domain::box(2, vec3(0, 0), vec3(1, 1));
    CHECK(bump_phi(box, vec3(0.5, 0.5)) == doctest::Approx(1.0));
    CHECK(bump_phi(box, vec3(0.05, 0.5)) == 0.0);
    CHECK(bump_phi(box, vec3(0.5, 0.99)) == 0.0);
    CHECK(bump_phi(box, vec3(0.25, 0.5)) == doctest::Approx(0.5).epsilon(1e-12));
    for (double t : {0.2, 0.3, 0.44}) {
        CHECK(bump_phi(box, vec3(t, 0.5)) ==
              doctest::Approx(bump_phi(box, vec3(1.0 - t, 0.5))).epsilon(1e-12));
        double v = bump_phi(box, vec3(t, t));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(bump_integral(box) == doctest::Approx(0.25).epsilon(1e-14));
    // midpoint quadrature of the profile against the closed form
    int m = 512;
    double sum = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            sum += bump_phi(box, vec3((i + 0.5) / m, (j + 0.5) / m));
    sum /= double(m) * m;
    CHECK(sum == doctest::Approx(bump_integral(box)).epsilon(1e-3));

    Domain wide = Domain::box(3, vec3(0, 0, 0), vec3(2, 2, 2));
    CHECK(bump_integral(wide) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(bump_phi(wide, vec3(1.0, 1.0, 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("perforated grid rule") {
    Domain unit = Domain::box(3, vec3(0, 0, 0), vec3(1, 1, 1));
    CHECK(perforated_grid_rule(unit, 0.5, 3, 128) == 64);
    CHECK(perforated_grid_rule(unit, 1.0 / 3, 3, 128) == 96);
    CHECK(perforated_grid_rule(unit, 0.25, 3, 128) == 128);
    CHECK(perforated_grid_rule(unit, 0.4, 3, 128) == 80);
    // capping the grid under-resolves the eps = 1/4 hole radius (1/64 < 2h)
    CHECK_THROWS_AS(perforated_grid_rule(unit, 0.25, 3, 96), ConfigError);
    CHECK_THROWS_AS(perforated_grid_rule(unit, 0.125, 3, 128), ConfigError);
    Domain big = Domain::box(3, vec3(0, 0, 0), vec3(2, 2, 2));
    CHECK(perforated_grid_rule(big, 0.5, 3, 256) == 128);
}

TEST_CASE("mms runner produces a passing rate table") {
    RunConfig cfg = RunConfig::defaults("mms");
    cfg.grid = 8;
    cfg.output_dir = (scratch("mms") / "out").string();
    Report rep = run_mms(cfg);
    CHECK(rep.pass);
    REQUIRE(rep.rows.size() == 4);
    for (const auto& row : rep.rows) CHECK(row.size() == rep.columns.size());
    std::size_t l2r = 0, conv = 0;
    for (std::size_t c = 0; c < rep.columns.size(); ++c) {
        if (rep.columns[c] == "l2_rate") l2r = c;
        if (rep.columns[c] == "converged") conv = c;
    }
    REQUIRE(l2r > 0);
    CHECK(rep.rows.back()[l2r] == doctest::Approx(2.0).epsilon(0.15));
    for (const auto& row : rep.rows) CHECK(row[conv] == 1.0);
}

TEST_CASE("analytic example runner passes at desk scale") {
    RunConfig cfg = RunConfig::defaults("example6-analytic");
    Report rep = run_example6_analytic(cfg);
    CHECK(rep.pass);
    REQUIRE(rep.rows.size() == 2);
    std::size_t ceps = rep.columns.size(), quad = rep.columns.size();
    for (std::size_t c = 0; c < rep.columns.size(); ++c) {
        if (rep.columns[c] == "c_eps") ceps = c;
        if (rep.columns[c] == "quad_rel_err") quad = c;
    }
    REQUIRE(ceps < rep.columns.size());
    REQUIRE(quad < rep.columns.size());
    CHECK(rep.rows[0][ceps] == doctest::Approx(c_eps(0.125, 3, 1.5)).epsilon(1e-13));
    CHECK(rep.rows[1][ceps] == doctest::Approx(c_eps(0.0625, 3, 1.5)).epsilon(1e-13));
    for (const auto& row : rep.rows) CHECK(row[quad] <= 1e-5);
}

TEST_CASE("report files are complete and rewrite identically") {
    RunConfig cfg = RunConfig::defaults("mms");
    cfg.grid = 8;
    fs::path out = scratch("report") / "out";
    cfg.output_dir = out.string();
    Report rep = run_mms(cfg);
    write_report(cfg, rep, 42.0);
    for (const char* leaf : {"report.csv", "report.json", "meta.txt", "config.txt"})
        CHECK(fs::exists(out / leaf));

    std::string csv = slurp(out / "report.csv");
    CHECK(csv.find("config_hash") != std::string::npos);
    CHECK(csv.find("l2_err") != std::string::npos);
    CHECK(slurp(out / "config.txt") == cfg.canonical());
    std::string meta = slurp(out / "meta.txt");
    CHECK(meta.find("pass = 1") != std::string::npos);
    CHECK(meta.find("wall_ms = 42.0") != std::string::npos);

    auto j = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(j["experiment"] == "mms");
    CHECK(j["pass"] == rep.pass);
    CHECK(j["columns"].size() == rep.columns.size());
    CHECK(j["rows"].size() == rep.rows.size());
    CHECK(j["config"] == cfg.canonical());

    std::string json_before = slurp(out / "report.json");
    write_report(cfg, rep, 99.0);  // different wall time: csv/json must not change
    CHECK(slurp(out / "report.csv") == csv);
    CHECK(slurp(out / "report.json") == json_before);

    Report broken = rep;
    broken.rows[0].pop_back();
    CHECK_THROWS_AS(write_report(cfg, broken, 1.0), std::logic_error);
}

TEST_CASE("solver parameters map through") {
    RunConfig cfg = RunConfig::defaults("mms");
    cfg.rel_tol = 1e-6;
    cfg.max_iter = 777;
    cfg.preconditioner = "none";
    SolverParams p = cfg.solver();
    CHECK(p.rel_tol == 1e-6);
    CHECK(p.max_iter == 777);
    CHECK(p.precond == SolverParams::Precond::none);
    cfg.preconditioner = "jacobi";
    CHECK(cfg.solver().precond == SolverParams::Precond::jacobi);
}
