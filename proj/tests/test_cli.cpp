#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mcf/cli.hpp"

using namespace mcf;
namespace fs = std::filesystem;

namespace {

cli::RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return cli::parse_config(in);
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mcflab_test_" + name);
    fs::remove_all(p);
    return p;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* small_disk = R"(
[domain]
kind = "disk"
radius = 1.0
[grid]
n = 64
[solver]
schedule = [4, 8]
)";

} // namespace

TEST_CASE("config: sections, arrays and defaults") {
    const cli::RunConfig c = parse(R"(
# comment
[domain]
kind = "dumbbell"
neck_radius = 0.3   # trailing comment
[grid]
n = 96
[solver]
schedule = [2, 4.5, 9]
scheme = "conservative"
[boundary]
shape = "lens"
motion = [[0, 0, 0], [1, 0.1, 0.05]]
[output]
dir = "somewhere"
)");
    CHECK(c.domain.kind == DomainSpec::Kind::axisym_dumbbell);
    CHECK(c.domain.dimension == 3);
    CHECK(c.domain.neck_radius == 0.3);
    CHECK(c.grid.n == 96);
    CHECK(c.solver.schedule == std::vector<double>{2, 4.5, 9});
    CHECK(c.solver.scheme == SolverOptions::Scheme::conservative);
    REQUIRE(c.boundary.present);
    REQUIRE(c.boundary.motion.size() == 2);
    CHECK(c.boundary.motion[1].s_right == 0.05);
    CHECK(c.out_dir == "somewhere");
    CHECK(c.solver.tolerance == 1e-8);
}

TEST_CASE("config: rejected inputs") {
    CHECK_THROWS_AS(parse("[domain]\nradius = 1.0\ncolour = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("[grid]\nn = sixty\n"), ConfigError);
    CHECK_THROWS_AS(parse("[domain]\nkind = \"torus\"\n"), ConfigError);
    CHECK_THROWS_AS(parse("[boundary]\nmotion = [[0, 0]]\n"), ConfigError);
    cli::Overrides none;
    cli::RunConfig dec = parse("[solver]\nschedule = [8, 4]\n");
    CHECK_THROWS_AS(cli::apply_overrides(dec, none), ConfigError);
    cli::RunConfig neg = parse("[solver]\nschedule = [-1, 4]\n");
    CHECK_THROWS_AS(cli::apply_overrides(neg, none), ConfigError);
    cli::RunConfig coarse = parse("[grid]\nn = 32\n");
    CHECK_THROWS_AS(cli::apply_overrides(coarse, none), ConfigError);
}

TEST_CASE("overrides: lambda-max and grid-n") {
    cli::RunConfig c = parse("[grid]\nn = 100\nn1 = 200\n");
    cli::Overrides o;
    o.lambda_max = 20.0;
    o.grid_n = 150;
    cli::apply_overrides(c, o);
    CHECK(c.solver.schedule == std::vector<double>{4, 8, 16, 20});
    CHECK(c.grid.n == 150);
    CHECK(c.grid.n1 == 300);
    cli::RunConfig d = parse("");
    cli::Overrides p;
    p.lambda_max = 16.0;
    cli::apply_overrides(d, p);
    CHECK(d.solver.schedule == std::vector<double>{4, 8, 16});
}

TEST_CASE("grids derived from the domain") {
    cli::RunConfig disk = parse("[grid]\nn = 256\n");
    const Grid g = cli::make_grid(disk);
    CHECK(g.kind() == GridKind::cartesian2d);
    CHECK(g.n0() == 256);
    CHECK(g.origin(0) == doctest::Approx(-1.1));
    cli::RunConfig ball = parse("[domain]\ndimension = 3\n[grid]\nn = 128\n");
    const Grid b = cli::make_grid(ball);
    CHECK(b.kind() == GridKind::axisym_rz);
    CHECK(b.n1() == 255);
    CHECK(b.spacing(0) == doctest::Approx(b.spacing(1)));
    cli::RunConfig db = parse("[domain]\nkind = \"axisym_dumbbell\"\n[grid]\nn = 192\n");
    CHECK(cli::make_grid(db).n1() == 1077);
    cli::RunConfig lens = parse("[boundary]\nshape = \"lens\"\n[grid]\nn = 256\nmargin = 0.05\n");
    const Grid l = cli::make_boundary_grid(lens, lens.boundary.spec());
    CHECK(l.origin(0) == doctest::Approx(-0.65));
    CHECK(l.origin(1) == doctest::Approx(-0.25));
}

TEST_CASE("validate: disk passes, square fails the hypotheses") {
    cli::RunConfig c = parse(small_disk);
    c.out_dir = scratch("validate_disk").string();
    CHECK(cli::run(cli::Command::validate, c) == cli::exit_code::ok);
    CHECK(fs::exists(fs::path(c.out_dir) / "mask.csv"));
    cli::RunConfig sq = parse("[boundary]\nshape = \"square\"\n[grid]\nn = 64\n");
    sq.out_dir = scratch("validate_square").string();
    CHECK(cli::run(cli::Command::validate, sq) == cli::exit_code::invariant);
    const auto checks = read_json(fs::path(sq.out_dir) / "checks.json");
    bool two_fails = false;
    for (const auto& ch : checks["checks"]) {
        if (ch["name"] == "boundary_hypothesis_2") two_fails = !ch["pass"].get<bool>();
    }
    CHECK(two_fails);
}

TEST_CASE("solve writes fields, checks and epsilon_grid values") {
    cli::RunConfig c = parse(small_disk);
    c.out_dir = scratch("solve").string();
    c.solver.lambda = 8.0;
    CHECK(cli::run(cli::Command::solve, c) == cli::exit_code::ok);
    const fs::path out(c.out_dir);
    for (const char* f : {"f_lambda.csv", "u_lambda.csv", "run.json", "checks.json", "timings.json"}) {
        CHECK(fs::exists(out / f));
    }
    const auto run = read_json(out / "run.json");
    CHECK(run["status"] == "ok");
    CHECK(run["solves"][0]["lambda"] == 8.0);
    CHECK(!run["epsilon_grid"].empty());
    CHECK(read_json(out / "checks.json")["all_pass"].get<bool>());
    std::ifstream csv(out / "f_lambda.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "axis0,axis1,value,mask");
}

TEST_CASE("non-convergence exits 3 and leaves the iterate") {
    cli::RunConfig c = parse(small_disk);
    c.out_dir = scratch("nonconv").string();
    c.solver.max_iterations = 1;
    CHECK(cli::run(cli::Command::ladder, c) == cli::exit_code::nonconvergence);
    CHECK(fs::exists(fs::path(c.out_dir) / "f_lambda_failed.csv"));
    CHECK(read_json(fs::path(c.out_dir) / "run.json")["status"] == "nonconvergence");
}

TEST_CASE("diagnose on a field without regular nodes exits 4") {
    const fs::path dir = scratch("diag_flat");
    fs::create_directories(dir);
    const Grid g = Grid::cartesian(64, 64, -1.1, 1.1, -1.1, 1.1);
    write_csv_file(build_mask(DomainSpec::disk(1.0), g), (dir / "flat.csv").string());
    cli::RunConfig c = parse(small_disk);
    c.diagnostics.field = (dir / "flat.csv").string();
    c.out_dir = (dir / "out").string();
    CHECK(cli::run(cli::Command::diagnose, c) == cli::exit_code::invariant);
    const auto run = read_json(dir / "out" / "run.json");
    CHECK(run["error"].get<std::string>().find("regular") != std::string::npos);
}

TEST_CASE("command line: bad schedule exits 2, unknown command exits 2") {
    const fs::path dir = scratch("cmdline");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "bad.toml");
        cfg << "[solver]\nschedule = [8, 4]\n";
    }
    const std::string cfg = (dir / "bad.toml").string();
    const std::string out = (dir / "out").string();
    {
        const char* argv[] = {"mcflab", "ladder", "--config", cfg.c_str(), "--out", out.c_str()};
        CHECK(cli::main(6, const_cast<char**>(argv)) == cli::exit_code::config);
    }
    {
        const char* argv[] = {"mcflab", "explode", "--config", cfg.c_str()};
        CHECK(cli::main(4, const_cast<char**>(argv)) == cli::exit_code::config);
    }
    {
        const char* argv[] = {"mcflab", "solve"};
        CHECK(cli::main(2, const_cast<char**>(argv)) == cli::exit_code::config);
    }
}

TEST_CASE("reruns are byte-identical") {
    cli::RunConfig c = parse("[soliton]\nfamily = \"grim_reaper\"\nnodes = 256\n");
    c.out_dir = scratch("rerun_a").string();
    CHECK(cli::run(cli::Command::soliton, c) == cli::exit_code::ok);
    cli::RunConfig d = c;
    d.out_dir = scratch("rerun_b").string();
    CHECK(cli::run(cli::Command::soliton, d) == cli::exit_code::ok);
    for (const auto& entry : fs::directory_iterator(c.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name == "timings.json") continue;
        CHECK_MESSAGE(slurp(entry.path()) == slurp(fs::path(d.out_dir) / name), name);
    }
}
