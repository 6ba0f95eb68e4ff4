#include "mcf/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcf/arrival.hpp"
#include "mcf/parallel.hpp"
#include "mcf/singular.hpp"
#include "mcf/translator.hpp"

namespace mcf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

// ---- configuration table ------------------------------------------------------------

double parse_real(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ConfigError("key '" + key + "': '" + text + "' is not a finite number");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
    return v;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

class Table {
public:
    explicit Table(std::istream& in) {
        std::vector<CLI::ConfigItem> items;
        try {
            items = CLI::ConfigTOML().from_config(in);
        } catch (const CLI::Error& e) {
            throw ConfigError(std::string("cannot parse configuration: ") + e.what());
        }
        for (const CLI::ConfigItem& item : items) {
            if (item.name == "++" || item.name == "--") continue;
            const std::string key = item.fullname();
            if (values_.count(key)) throw ConfigError("duplicate key '" + key + "'");
            values_[key] = item.inputs;
        }
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::vector<std::string>& raw(const std::string& key) {
        used_.insert(key);
        return values_.at(key);
    }

    std::string scalar(const std::string& key) {
        const auto& v = raw(key);
        if (v.size() != 1) throw ConfigError("key '" + key + "' expects a single value");
        return v.front();
    }

    void real(const std::string& key, double& out) {
        if (has(key)) out = parse_real(key, scalar(key));
    }
    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (!has(key)) return;
        const long long v = parse_integer(key, scalar(key));
        if (v < static_cast<long long>(std::numeric_limits<Int>::min()) ||
            static_cast<unsigned long long>(v) > static_cast<unsigned long long>(std::numeric_limits<Int>::max())) {
            throw ConfigError("key '" + key + "' is out of range");
        }
        out = static_cast<Int>(v);
    }
    void text(const std::string& key, std::string& out) {
        if (has(key)) out = scalar(key);
    }
    void flag(const std::string& key, bool& out) {
        if (!has(key)) return;
        const std::string v = scalar(key);
        if (v == "true") out = true;
        else if (v == "false") out = false;
        else throw ConfigError("key '" + key + "' expects true or false");
    }
    void reals(const std::string& key, std::vector<double>& out) {
        if (!has(key)) return;
        out.clear();
        for (const std::string& s : raw(key)) out.push_back(parse_real(key, trim(s)));
    }
    /// Array of bracketed triples, e.g. [[0, 0, 0], [1, 0.1, 0.1]].
    void triples(const std::string& key, std::vector<std::array<double, 3>>& out) {
        if (!has(key)) return;
        out.clear();
        for (std::string s : raw(key)) {
            s = trim(s);
            if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
                throw ConfigError("key '" + key + "' expects an array of [t, s_left, s_right] triples");
            }
            std::vector<double> row;
            std::stringstream ss(s.substr(1, s.size() - 2));
            std::string part;
            while (std::getline(ss, part, ',')) row.push_back(parse_real(key, trim(part)));
            if (row.size() != 3) throw ConfigError("key '" + key + "': every motion sample has 3 entries");
            out.push_back({row[0], row[1], row[2]});
        }
    }

    void reject_unused() const {
        std::string unknown;
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
        }
        if (!unknown.empty()) throw ConfigError("unknown configuration keys: " + unknown);
    }

private:
    std::map<std::string, std::vector<std::string>> values_;
    std::set<std::string> used_;
};

SolverOptions::Scheme scheme_from_string(const std::string& s) {
    if (s == "nondivergence") return SolverOptions::Scheme::nondivergence;
    if (s == "conservative") return SolverOptions::Scheme::conservative;
    throw ConfigError("solver.scheme must be nondivergence or conservative");
}

std::string to_string(SolverOptions::Scheme s) {
    return s == SolverOptions::Scheme::conservative ? "conservative" : "nondivergence";
}

json config_echo(const RunConfig& c) {
    const DomainSpec& d = c.domain;
    json out;
    out["domain"] = {{"kind", mcf::to_string(d.kind)},
                     {"dimension", d.dimension},
                     {"radius", d.radius},
                     {"center_x", d.center_x},
                     {"center_y", d.center_y},
                     {"semi_axis_0", d.semi_axis_0},
                     {"semi_axis_1", d.semi_axis_1},
                     {"bulb_radius", d.bulb_radius},
                     {"bulb_center", d.bulb_center},
                     {"neck_radius", d.neck_radius},
                     {"neck_arc_radius", d.neck_arc_radius},
                     {"blend_start", d.blend_start},
                     {"blend_width", d.blend_width},
                     {"lens_offset", d.lens_offset}};
    out["grid"] = {{"n", c.grid.n}, {"n1", c.grid.n1}, {"margin", c.grid.margin}};
    const SolverConfig& s = c.solver;
    out["solver"] = {{"schedule", s.schedule},        {"lambda", s.lambda},
                     {"tolerance", s.tolerance},      {"max_iterations", s.max_iterations},
                     {"scheme", to_string(s.scheme)}, {"uniqueness", s.uniqueness},
                     {"perturbation", s.perturbation}, {"seed", s.seed}};
    const DiagnosticsConfig& g = c.diagnostics;
    out["diagnostics"] = {{"field", g.field},
                          {"k_kind", g.k_kind},
                          {"k_fraction", g.k_fraction},
                          {"k_inner", g.k_inner},
                          {"k_outer", g.k_outer},
                          {"nested_levels", g.nested_levels},
                          {"epsilon_limit", g.epsilon_limit},
                          {"exact_arrival", g.exact_arrival},
                          {"exact_radius", g.exact_radius},
                          {"exact_tolerance", g.exact_tolerance},
                          {"arrival_tolerance", g.arrival_tolerance},
                          {"umbilicity_tolerance", g.umbilicity_tolerance},
                          {"expected_ratio", g.expected_ratio},
                          {"ratio_tolerance", g.ratio_tolerance},
                          {"product_probes", g.product_probes},
                          {"seed", g.seed},
                          {"expect_type", g.expect_type},
                          {"expect_plane", g.expect_plane},
                          {"plane_tolerance", g.plane_tolerance},
                          {"type_tolerance", g.type_tolerance}};
    if (c.boundary.present) {
        const BoundaryConfig& b = c.boundary;
        json motion = json::array();
        for (const MotionSample& m : b.motion) motion.push_back({m.t, m.s_left, m.s_right});
        out["boundary"] = {{"shape", b.shape},
                           {"radius", b.radius},
                           {"offset", b.offset},
                           {"motion", motion},
                           {"horizon_coefficient", b.horizon_coefficient},
                           {"horizon_exponent", b.horizon_exponent},
                           {"reach_margin", b.reach_margin},
                           {"chord_tolerance", b.chord_tolerance}};
    }
    const SolitonConfig& t = c.soliton;
    out["soliton"] = {{"family", t.family},
                      {"speed", t.speed},
                      {"nodes", t.nodes},
                      {"extent", t.extent},
                      {"trials", t.trials},
                      {"seed", t.seed},
                      {"hzero_sets", t.hzero_sets},
                      {"residual_tolerance", t.residual_tolerance},
                      {"min_order", t.min_order},
                      {"stationarity_tolerance", t.stationarity_tolerance}};
    return out;
}

// ---- run bookkeeping ---------------------------------------------------------------

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
    double margin = 0.0; // positive when passing
    std::optional<double> epsilon_grid;
    std::string detail;
};

Check at_most(std::string name, double value, double limit) {
    return {std::move(name), value <= limit, value, limit, limit - value, std::nullopt, ""};
}

Check at_least(std::string name, double value, double limit) {
    return {std::move(name), value >= limit, value, limit, value - limit, std::nullopt, ""};
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

json to_json_value(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class Run {
public:
    Run(Command command, const RunConfig& config) : out_(config.out_dir) {
        fs::create_directories(out_);
        manifest_["command"] = to_string(command);
        manifest_["config"] = config_echo(config);
        manifest_["versions"] = {{"mcflab", kVersion},
                                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                               "." + std::to_string(EIGEN_MINOR_VERSION)},
                                 {"compiler", __VERSION__},
                                 {"cxx_standard", static_cast<long>(__cplusplus)}};
        manifest_["solves"] = json::array();
        manifest_["epsilon_grid"] = json::object();
        manifest_["checks_file"] = "checks.json";
        manifest_["timings_file"] = "timings.json";
    }

    json& manifest() { return manifest_; }
    std::string path(const std::string& name) const { return (out_ / name).string(); }

    void field(const std::string& name, const ScalarField& f) {
        write_csv_file(f, path(name));
        artifact(name);
    }
    void artifact(const std::string& name) { artifacts_.push_back(name); }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(path(name));
        if (!out) throw ConfigError("cannot write " + path(name));
        out << j.dump(2) << '\n';
        artifact(name);
    }

    void check(Check c) {
        if (c.epsilon_grid) manifest_["epsilon_grid"][c.name] = to_json_value(*c.epsilon_grid);
        checks_.push_back(std::move(c));
    }
    bool all_pass() const {
        return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass; });
    }

    void grid(const Grid& g) {
        manifest_["grid"] = {{"kind", mcf::to_string(g.kind())},
                             {"n0", g.n0()},
                             {"n1", g.n1()},
                             {"spacing", {g.spacing(0), g.spacing(1)}},
                             {"origin", {g.origin(0), g.origin(1)}}};
    }

    void solve(const RegularizedSolution& s, const std::string& role) {
        json trace = json::array();
        for (const auto& [lambda, residual] : s.trace) trace.push_back({lambda, residual});
        manifest_["solves"].push_back({{"role", role},
                                       {"lambda", s.lambda},
                                       {"iterations", s.iterations},
                                       {"residual", s.residual},
                                       {"trace", trace}});
    }

    /// Times `fn` under `label` (stored in timings.json only).
    template <class Fn>
    auto timed(const std::string& label, Fn&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        struct Stop {
            Run* run;
            std::string label;
            std::chrono::steady_clock::time_point t0;
            ~Stop() {
                run->timings_[label] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        } stop{this, label, t0};
        return fn();
    }

    int finish(int code, const std::string& error = "") {
        if (code == exit_code::ok && !all_pass()) code = exit_code::invariant;
        static const std::map<int, std::string> status = {{exit_code::ok, "ok"},
                                                          {exit_code::failure, "internal_error"},
                                                          {exit_code::config, "config_error"},
                                                          {exit_code::nonconvergence, "nonconvergence"},
                                                          {exit_code::invariant, "invariant_violation"}};
        json checks = json::array();
        for (const Check& c : checks_) {
            json j = {{"name", c.name},
                      {"pass", c.pass},
                      {"value", to_json_value(c.value)},
                      {"limit", to_json_value(c.limit)},
                      {"margin", to_json_value(c.margin)}};
            if (c.epsilon_grid) j["epsilon_grid"] = to_json_value(*c.epsilon_grid);
            if (!c.detail.empty()) j["detail"] = c.detail;
            checks.push_back(std::move(j));
        }
        const json checks_doc = {{"all_pass", all_pass()}, {"checks", checks}};
        write_json("checks.json", checks_doc);
        manifest_["status"] = status.at(code);
        manifest_["exit_code"] = code;
        if (!error.empty()) manifest_["error"] = error;
        manifest_["checks"] = checks_doc;
        manifest_["artifacts"] = artifacts_;
        json timings = {{"seconds", timings_}, {"threads", max_threads()}};
        {
            std::ofstream t(path("timings.json"));
            t << timings.dump(2) << '\n';
        }
        std::ofstream out(path("run.json"));
        out << manifest_.dump(2) << '\n';
        return code;
    }

private:
    fs::path out_;
    json manifest_;
    std::vector<Check> checks_;
    std::vector<std::string> artifacts_;
    std::map<std::string, double> timings_;
};

SolverOptions solver_options(const RunConfig& c) {
    SolverOptions o;
    o.tolerance = c.solver.tolerance;
    o.max_iterations = c.solver.max_iterations;
    o.scheme = c.solver.scheme;
    return o;
}

double interior_max(const ScalarField& f) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.values().size(); ++k) {
        if (f.mask()[k] == NodeClass::interior) top = std::max(top, f.values()[k]);
    }
    return top;
}

// ---- checks on converged solutions ---------------------------------------------------

void solution_checks(Run& run, const RunConfig& config, const RegularizedSolution& s, bool zero_data) {
    const std::string tag = "[lambda=" + fmt(s.lambda) + "]";
    run.check(at_most("residual" + tag, s.residual, config.solver.tolerance));
    if (config.solver.scheme == SolverOptions::Scheme::nondivergence) {
        run.check(at_most("mean_curvature_identity" + tag, mean_curvature_identity_defect(s), 1e-6));
    }
    if (zero_data) {
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < s.f.values().size(); ++k) {
            if (s.f.mask()[k] == NodeClass::interior) lowest = std::min(lowest, s.f.values()[k]);
        }
        Check c = at_least("positivity" + tag, lowest, 0.0);
        c.pass = lowest > 0.0;
        run.check(c);
    }
    const ScalarField u = u_lambda(s);
    for (double level : config.diagnostics.nested_levels) {
        const InequalityCheck g = gradient_boundary_max(s.f, superlevel_set(u, level));
        Check c{"gradient_boundary_max" + tag + "[K=u>=" + fmt(level) + "max]",
                g.pass,
                g.interior,
                g.boundary + g.epsilon_grid,
                g.boundary + g.epsilon_grid - g.interior,
                g.epsilon_grid,
                ""};
        run.check(c);
    }
}

InequalityCheck ratio_inequality(Run& run, const RunConfig& config, const RegularizedSolution& s) {
    const ScalarField u = u_lambda(s);
    const InequalityCheck r = translator_ratio_inequality(s.f, superlevel_set(u, config.diagnostics.k_fraction));
    Check c{"translator_inequality[lambda=" + fmt(s.lambda) + "]",
            r.pass,
            r.interior,
            r.boundary - r.epsilon_grid,
            r.interior - (r.boundary - r.epsilon_grid),
            r.epsilon_grid,
            ""};
    run.check(c);
    return r;
}

/// Re-solve from f + noise of amplitude perturbation * max f; compare u.
void uniqueness_check(Run& run, const RunConfig& config, const DomainSpec& domain, const ScalarField& dirichlet,
                      const RegularizedSolution& s) {
    const std::string name = "uniqueness[lambda=" + fmt(s.lambda) + "]";
    std::mt19937_64 rng(config.solver.seed);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    const double amplitude = config.solver.perturbation * interior_max(s.f);
    std::vector<double> v = s.f.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double e = noise(rng);
        if (s.f.mask()[k] == NodeClass::interior) v[k] += amplitude * e;
    }
    const ScalarField init = s.f.with_values(std::move(v));
    const double limit = 10.0 * config.solver.tolerance;
    try {
        const RegularizedSolution again = solve_translator_graph(domain, dirichlet, s.lambda, &init, solver_options(config));
        run.solve(again, "uniqueness");
        double diff = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (s.f.mask()[k] == NodeClass::interior) {
                diff = std::max(diff, std::abs(again.f.values()[k] - s.f.values()[k]) / s.lambda);
            }
        }
        run.check(at_most(name, diff, limit));
    } catch (const NonConvergenceError& e) {
        Check c = at_most(name, std::numeric_limits<double>::infinity(), limit);
        c.detail = std::string("perturbed re-solve did not converge: ") + e.what();
        run.check(c);
    }
}

double exact_arrival_error(const RunConfig& config, const ScalarField& u) {
    const DomainSpec& d = config.domain;
    const Vec2 c(d.center_x, d.center_y);
    const double denom = 2.0 * (d.dimension - 1);
    const Grid& g = u.grid();
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (u.mask()[k] != NodeClass::interior) continue;
        const Vec2 x = g.position(g.node(k));
        const double rho = (x - c).norm();
        if (rho > config.diagnostics.exact_radius * d.radius) continue;
        worst = std::max(worst, std::abs(u.values()[k] - (d.radius * d.radius - rho * rho) / denom));
    }
    return worst;
}

std::string member_file(double lambda) { return "u_lambda_" + fmt(lambda) + ".csv"; }

void write_ladder_summary(Run& run, const LadderResult& ladder) {
    std::ofstream out(run.path("ladder.csv"));
    out << "lambda,center_value,max_gradient,min_kappa_first,max_kappa_last,iterations,residual,successive_difference\n";
    char buf[512];
    for (std::size_t k = 0; k < ladder.summaries.size(); ++k) {
        const LadderSummary& s = ladder.summaries[k];
        const double diff = k == 0 ? std::numeric_limits<double>::quiet_NaN() : ladder.successive_differences[k - 1];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", s.lambda, s.center_value,
                      s.max_gradient, s.min_kappa_first, s.max_kappa_last, s.iterations, s.residual, diff);
        out << buf;
    }
    run.artifact("ladder.csv");
}

void write_ladder_members(Run& run, const LadderResult& ladder) {
    for (const RegularizedSolution& s : ladder.solutions) {
        run.solve(s, "ladder");
        run.field(member_file(s.lambda), u_lambda(s));
    }
    write_ladder_summary(run, ladder);
}

void successive_check(Run& run, const LadderResult& ladder) {
    const auto& d = ladder.successive_differences;
    if (d.size() < 2) return;
    double worst = 0.0;
    for (std::size_t k = 1; k < d.size(); ++k) worst = std::max(worst, d[k] / d[k - 1]);
    Check c = at_most("successive_differences_decreasing", worst, 1.0);
    c.pass = worst < 1.0;
    c.detail = "largest ratio of consecutive sup differences";
    run.check(c);
}

/// Ladder with every per-member check. Writes member files even when a member fails.
LadderResult run_ladder(Run& run, const RunConfig& config, const Grid& grid) {
    const ScalarField mask = build_mask(config.domain, grid);
    LadderResult ladder;
    try {
        ladder = run.timed("ladder", [&] {
            return lambda_ladder(config.domain, grid, config.solver.schedule, nullptr, solver_options(config));
        });
    } catch (const LadderError& e) {
        if (e.partial()) write_ladder_members(run, *e.partial());
        if (e.iterate()) run.field("f_lambda_failed.csv", *e.iterate());
        throw;
    }
    write_ladder_members(run, ladder);
    const RegularizedSolution& last = ladder.solutions.back();
    run.field("f_lambda.csv", last.f);
    run.field("u_lambda.csv", u_lambda(last));

    run.timed("ladder_checks", [&] {
        InequalityCheck final_ratio;
        std::vector<double> exact;
        for (std::size_t k = 0; k < ladder.solutions.size(); ++k) {
            const RegularizedSolution& s = ladder.solutions[k];
            solution_checks(run, config, s, true);
            final_ratio = ratio_inequality(run, config, s);
            if (config.diagnostics.exact_arrival) exact.push_back(exact_arrival_error(config, u_lambda(s)));
            const bool want = config.solver.uniqueness == "all" ||
                              (config.solver.uniqueness == "final" && k + 1 == ladder.solutions.size());
            if (want) uniqueness_check(run, config, config.domain, mask, s);
        }
        Check eps = at_most("translator_inequality_epsilon_grid", final_ratio.epsilon_grid,
                            config.diagnostics.epsilon_limit);
        eps.epsilon_grid = final_ratio.epsilon_grid;
        run.check(eps);
        successive_check(run, ladder);
        if (!exact.empty()) {
            json errors = json::array();
            for (double e : exact) errors.push_back(e);
            run.manifest()["exact_arrival_error"] = errors;
            run.check(at_most("exact_arrival_error", exact.back(), config.diagnostics.exact_tolerance));
            double rise = 0.0;
            for (std::size_t k = 1; k < exact.size(); ++k) rise = std::max(rise, exact[k] - exact[k - 1]);
            Check mono = at_most("exact_arrival_monotone", rise, 0.0);
            mono.detail = "largest increase of the error along the ladder";
            run.check(mono);
        }
        return 0;
    });
    return ladder;
}

// ---- commands ------------------------------------------------------------------------

void hypotheses_checks(Run& run, const BoundaryMotionSpec& spec) {
    const HypothesisReport report = validate_hypotheses(spec);
    for (std::size_t k = 0; k < report.items.size(); ++k) {
        const HypothesisResult& h = report.items[k];
        Check c{"boundary_hypothesis_" + std::to_string(k + 1), h.pass, h.pass ? 1.0 : 0.0, 1.0, h.pass ? 0.0 : -1.0,
                std::nullopt, h.detail};
        run.check(c);
    }
    run.manifest()["corner_angles"] = {report.corner_angles[0], report.corner_angles[1]};
}

int cmd_validate(Run& run, const RunConfig& config) {
    if (config.boundary.present) {
        const BoundaryMotionSpec spec = config.boundary.spec();
        hypotheses_checks(run, spec);
        const Grid grid = make_boundary_grid(config, spec);
        run.grid(grid);
        const StaircaseData sc = staircase(spec, grid, config.solver.schedule.front());
        run.field("mask.csv", sc.dirichlet);
        return exit_code::ok;
    }
    const ConvexityReport cv = validate_mean_convex(config.domain, 4096);
    Check c = at_least("mean_convex", cv.min_mean_curvature, 0.0);
    c.pass = cv.pass;
    c.detail = "minimum boundary mean curvature at (" + fmt(cv.min_location[0]) + ", " + fmt(cv.min_location[1]) + ")";
    run.check(c);
    if (!cv.corner_angles.empty()) run.manifest()["corner_angles"] = cv.corner_angles;
    const Grid grid = make_grid(config);
    run.grid(grid);
    const ScalarField mask = build_mask(config.domain, grid);
    run.manifest()["mask"] = {{"interior", mask.count(NodeClass::interior)},
                              {"boundary", mask.count(NodeClass::boundary)},
                              {"outside", mask.count(NodeClass::outside)}};
    run.field("mask.csv", mask);
    return exit_code::ok;
}

int cmd_solve(Run& run, const RunConfig& config) {
    const Grid grid = make_grid(config);
    run.grid(grid);
    const double lambda = std::isnan(config.solver.lambda) ? config.solver.schedule.back() : config.solver.lambda;
    const ScalarField mask = build_mask(config.domain, grid);
    RegularizedSolution s;
    try {
        s = run.timed("solve", [&] {
            return solve_translator_graph(config.domain, mask, lambda, nullptr, solver_options(config));
        });
    } catch (const NonConvergenceError& e) {
        run.field("f_lambda.csv", e.iterate());
        throw;
    }
    run.solve(s, "solve");
    run.field("f_lambda.csv", s.f);
    run.field("u_lambda.csv", u_lambda(s));
    run.timed("checks", [&] {
        solution_checks(run, config, s, true);
        ratio_inequality(run, config, s);
        if (config.solver.uniqueness != "none") uniqueness_check(run, config, config.domain, mask, s);
        if (config.diagnostics.exact_arrival) {
            run.check(at_most("exact_arrival_error", exact_arrival_error(config, u_lambda(s)),
                              config.diagnostics.exact_tolerance));
        }
        return 0;
    });
    return exit_code::ok;
}

int cmd_ladder(Run& run, const RunConfig& config) {
    const Grid grid = make_grid(config);
    run.grid(grid);
    run_ladder(run, config, grid);
    return exit_code::ok;
}

json singular_json(const SingularityReport& r) {
    json cands = json::array();
    for (const SingularCandidate& c : r.candidates) {
        json shells = json::array();
        for (const ShellTrace& s : c.shells) {
            shells.push_back({{"distance", s.distance},
                              {"probes", s.probes},
                              {"regular_probes", s.regular_probes},
                              {"ratio_first", s.ratio_first},
                              {"ratio_last", s.ratio_last}});
        }
        cands.push_back({{"centroid", {c.centroid[0], c.centroid[1]}},
                         {"peak", {c.peak.i, c.peak.j}},
                         {"peak_position", {c.peak_position[0], c.peak_position[1]}},
                         {"node_count", c.node_count},
                         {"on_axis", c.on_axis},
                         {"blowup_trace", c.blowup_trace},
                         {"blowup_increasing", c.blowup_increasing},
                         {"nonregular_counts", c.nonregular_counts},
                         {"type", mcf::to_string(c.type)},
                         {"shells", shells},
                         {"limit_first", c.limit_first},
                         {"limit_last", c.limit_last},
                         {"min_ratio", c.min_ratio},
                         {"convex_type", c.convex_type},
                         {"note", c.note}});
    }
    return {{"lambdas", r.lambdas},
            {"dimension", r.dimension},
            {"eps_reg", r.eps_reg},
            {"h_max_resolvable", r.h_max_resolvable},
            {"tolerance", r.tolerance},
            {"nonregular_measure", r.nonregular_measure},
            {"candidates", cands}};
}

void singular_checks(Run& run, const RunConfig& config, const SingularityReport& report) {
    const DiagnosticsConfig& d = config.diagnostics;
    if (d.expect_type.empty()) return;
    const auto near = axis_candidates_near(report, d.expect_plane, d.plane_tolerance);
    Check count = at_most("singular_axis_candidates", static_cast<double>(near.size()), 1.0);
    count.pass = near.size() == 1;
    count.detail = "axis candidates within " + fmt(d.plane_tolerance) + " of z = " + fmt(d.expect_plane);
    run.check(count);
    if (near.size() != 1) return;
    const SingularCandidate& c = *near.front();
    Check type{"tangent_type", mcf::to_string(c.type) == d.expect_type, 0.0, 0.0, 0.0, std::nullopt,
               "classified " + mcf::to_string(c.type) + ", expected " + d.expect_type};
    run.check(type);
    const double n1 = report.dimension - 1;
    const double e_first = d.expect_type == "cylinder" ? 0.0 : 1.0 / n1;
    const double e_last = d.expect_type == "cylinder" ? 1.0 : 1.0 / n1;
    const double off = std::max(std::abs(c.limit_first - e_first), std::abs(c.limit_last - e_last));
    run.check(at_most("tangent_signature", off, d.type_tolerance));
    run.check(at_least("convex_type", c.min_ratio, -d.type_tolerance));
}

int cmd_diagnose(Run& run, const RunConfig& config) {
    const DiagnosticsConfig& d = config.diagnostics;
    ScalarField u;
    std::optional<LadderResult> ladder;
    if (!d.field.empty()) {
        const GridKind kind = config.domain.dimension == 3 ? GridKind::axisym_rz : GridKind::cartesian2d;
        u = read_csv_file(d.field, kind);
        run.grid(u.grid());
    } else {
        const Grid grid = make_grid(config);
        run.grid(grid);
        ladder = run_ladder(run, config, grid);
        u = u_lambda(ladder->solutions.back());
    }
    const Grid& g = u.grid();
    const double eps_reg = regularity_threshold(g);
    run.manifest()["eps_reg"] = eps_reg;
    run.manifest()["h_max_resolvable"] = h_max_resolvable(g);
    const std::vector<CurvatureDiagnostics> diags = run.timed("curvatures", [&] { return diagnose_field(u, eps_reg); });
    write_curvature_csv(u, diags, run.path("curvature.csv"));
    run.artifact("curvature.csv");

    NodeSet K;
    if (d.k_kind == "superlevel") {
        K = superlevel_set(u, d.k_fraction);
    } else {
        const Vec2 c(config.domain.center_x, config.domain.center_y);
        K = ball_set(u, c, d.k_outer);
        const NodeSet inner = ball_set(u, c, d.k_inner);
        for (std::size_t k = 0; k < K.size(); ++k) K[k] = K[k] && !inner[k];
    }
    std::size_t members_regular = 0;
    for (std::size_t k = 0; k < K.size(); ++k) {
        K[k] = K[k] && diags[k].regular;
        members_regular += K[k] ? 1 : 0;
    }
    run.manifest()["K"] = {{"kind", d.k_kind}, {"regular_nodes", members_regular}};
    if (members_regular == 0) throw PreconditionError("the diagnostic set K has no regular node");

    run.timed("diagnostic_checks", [&] {
        const double defect = arrival_residual(u, K, eps_reg);
        run.manifest()["arrival_residual"] = defect;
        if (!std::isnan(d.arrival_tolerance)) run.check(at_most("arrival_residual", defect, d.arrival_tolerance));
        const RatioBound rb = ratio_bound_check(u, K, eps_reg);
        run.check({"ratio_bound", rb.pass, rb.interior_min, std::min(0.0, rb.boundary_min) - rb.epsilon_grid,
                   rb.margin + rb.epsilon_grid, rb.epsilon_grid, ""});
        std::vector<CurvatureDiagnostics> inK;
        for (std::size_t k = 0; k < K.size(); ++k) {
            if (K[k]) inK.push_back(diags[k]);
        }
        run.check(at_most("umbilicity_excess", umbilicity_excess(inK), d.umbilicity_tolerance));
        if (!std::isnan(d.expected_ratio)) {
            double off = 0.0;
            for (const CurvatureDiagnostics& cd : inK) off = std::max(off, std::abs(cd.ratio - d.expected_ratio));
            run.check(at_most("ratio_expected", off, d.ratio_tolerance));
        }
        std::vector<std::size_t> regular;
        for (std::size_t k = 0; k < diags.size(); ++k) {
            if (u.mask()[k] == NodeClass::interior && diags[k].regular) regular.push_back(k);
        }
        std::mt19937_64 rng(d.seed);
        std::shuffle(regular.begin(), regular.end(), rng);
        regular.resize(std::min<std::size_t>(regular.size(), static_cast<std::size_t>(d.product_probes)));
        std::sort(regular.begin(), regular.end());
        std::vector<NodeIndex> probes;
        for (std::size_t k : regular) probes.push_back(g.node(k));
        Check lift = at_most("product_lift", product_lift_check(u, probes, eps_reg), 0.0);
        lift.detail = std::to_string(probes.size()) + " probes";
        run.check(lift);
        return 0;
    });

    if (ladder) {
        const SingularityReport report = run.timed("singular", [&] {
            return classify_tangent(detect_singular(*ladder), u);
        });
        run.write_json("singular.json", singular_json(report));
        singular_checks(run, config, report);
    }
    return exit_code::ok;
}

bool unimodal(const std::vector<double>& v) {
    std::size_t k = 1;
    while (k < v.size() && v[k] >= v[k - 1]) ++k;
    while (k < v.size() && v[k] <= v[k - 1]) ++k;
    return k == v.size();
}

int cmd_boundary(Run& run, const RunConfig& config) {
    if (!config.boundary.present) throw ConfigError("the boundary command needs a [boundary] section");
    const BoundaryMotionSpec spec = config.boundary.spec();
    const Grid grid = make_boundary_grid(config, spec);
    run.grid(grid);
    hypotheses_checks(run, spec);
    run.manifest()["horizon"] = spec.horizon(config.solver.schedule.back());

    BoundaryFlowResult flow;
    try {
        flow = run.timed("boundary_flow", [&] {
            return solve_boundary_flow(spec, grid, config.solver.schedule, solver_options(config));
        });
    } catch (const LadderError& e) {
        if (e.partial()) write_ladder_members(run, *e.partial());
        if (e.iterate()) run.field("f_lambda_failed.csv", *e.iterate());
        throw;
    }
    write_ladder_members(run, flow.ladder);
    for (const RegularizedSolution& s : flow.ladder.solutions) {
        run.check(at_most("residual[lambda=" + fmt(s.lambda) + "]", s.residual, config.solver.tolerance));
    }
    successive_check(run, flow.ladder);
    run.field("u_boundary.csv", flow.u);

    const StaircaseData& sc = flow.staircases.back();
    {
        std::ofstream out(run.path("staircase.csv"));
        out << "axis0,axis1,foot_x,foot_y,arc,arclength,value,certificate\n";
        char buf[512];
        for (const TraceNode& t : sc.nodes) {
            const Vec2 x = grid.position(t.node);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%s\n", x[0], x[1], t.foot[0],
                          t.foot[1], t.arc == 0 ? "sigma" : "sigma_prime", t.arclength, t.value,
                          to_string(t.certificate).c_str());
            out << buf;
        }
        run.artifact("staircase.csv");
    }
    run.manifest()["staircase"] = {{"lambda", sc.lambda}, {"horizon", sc.horizon}, {"collar", sc.collar}};

    std::vector<double> trace;
    const double L = spec.sigma_prime.length();
    for (int k = 0; k <= 4096; ++k) trace.push_back(staircase_value(spec, sc.lambda, 1, L * k / 4096));
    Check mono{"staircase_monotone", unimodal(trace), 0.0, 0.0, 0.0, std::nullopt,
               "trace along Sigma' nondecreasing from each end of Gamma"};
    run.check(mono);

    std::vector<Vec2> curve;
    std::size_t reached = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        reached += flow.u.mask()[k] == NodeClass::interior && !flow.not_reached[k];
    }
    run.manifest()["reached_nodes"] = reached;
    try {
        const LimitCurve lc = run.timed("limit_curve", [&] { return limit_surface(spec, flow.u, flow.horizon); });
        curve = lc.points;
        run.manifest()["limit_curve"] = {{"components", lc.components},
                                         {"level", lc.level},
                                         {"straightness", lc.straightness},
                                         {"hausdorff_to_chord", lc.hausdorff_to_chord},
                                         {"chord", {lc.chord_left[0], lc.chord_left[1], lc.chord_right[0], lc.chord_right[1]}}};
        if (!std::isnan(config.boundary.chord_tolerance)) {
            run.check(at_most("limit_curve_hausdorff", lc.hausdorff_to_chord, config.boundary.chord_tolerance));
        }
    } catch (const DegenerateOutputError& e) {
        // Nothing is reached: the limit is Sigma itself, which must then already be minimal.
        curve = spec.sigma.sample(grid.max_spacing());
        const bool straight = spec.sigma.pieces.size() == 1 && !spec.sigma.pieces.front().is_arc();
        Check c{"limit_curve_is_sigma", straight, 0.0, 0.0, 0.0, std::nullopt, e.what()};
        run.check(c);
    }
    {
        std::ofstream out(run.path("m_infinity.csv"));
        out << "x,y\n";
        char buf[128];
        for (const Vec2& p : curve) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p[0], p[1]);
            out << buf;
        }
        run.artifact("m_infinity.csv");
    }
    return exit_code::ok;
}

int cmd_soliton(Run& run, const RunConfig& config) {
    const SolitonConfig& c = config.soliton;
    const bool reaper = c.family == "grim_reaper";
    const double extent = std::isnan(c.extent) ? (reaper ? 1.2 : 4.0) / c.speed : c.extent;
    const TranslatorSpec spec = reaper ? grim_reaper(c.speed) : bowl(c.speed, extent);
    if (reaper && !(extent < spec.extent())) throw ConfigError("soliton.extent must stay below pi / (2 speed)");
    const Velocity v = Velocity::vertical(c.speed);
    const auto grid_for = [&](int n) { return reaper ? Grid::line(n, -extent, extent) : Grid::radial(n, extent); };
    const auto sup_residual = [&](const GraphSurface& s) {
        const ScalarField r = translator_residual(s, v);
        double worst = 0.0;
        for (std::size_t k = 0; k < r.values().size(); ++k) {
            if (r.mask()[k] == NodeClass::interior) worst = std::max(worst, std::abs(r.values()[k]));
        }
        return worst;
    };
    const Grid coarse = grid_for(c.nodes);
    const Grid fine = grid_for(2 * c.nodes);
    run.grid(fine);
    const GraphSurface s_coarse = sample_graph(spec, coarse);
    const GraphSurface s_fine = sample_graph(spec, fine);
    const double r_coarse = sup_residual(s_coarse);
    const double r_fine = sup_residual(s_fine);
    const double order = std::log(r_coarse / r_fine) / std::log(coarse.spacing(0) / fine.spacing(0));
    const StationarityResult st = run.timed("stationarity", [&] { return stationarity_check(s_fine, v, c.trials, c.seed); });
    const HzeroResult hz = hzero_check(s_fine, c.hzero_sets);
    const ScaledReal area = weighted_area(s_fine, v);

    {
        std::ofstream out(run.path("soliton_profile.csv"));
        out << "r,phi,phi_prime\n";
        char buf[128];
        for (int i = 0; i < fine.n0(); ++i) {
            const double x = fine.coord(0, i);
            const auto [phi, dphi] = spec.height(x);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x, phi, dphi);
            out << buf;
        }
        run.artifact("soliton_profile.csv");
    }
    run.write_json("soliton.json", {{"family", c.family},
                                    {"speed", c.speed},
                                    {"extent", extent},
                                    {"nodes", {coarse.n0(), fine.n0()}},
                                    {"residual_sup", {r_coarse, r_fine}},
                                    {"order", order},
                                    {"stationarity",
                                     {{"relative", st.relative},
                                      {"max_derivative", st.max_derivative},
                                      {"energy", st.energy},
                                      {"trials", c.trials}}},
                                    {"hzero",
                                     {{"pass", hz.pass},
                                      {"subgrids", hz.subgrids},
                                      {"worst_gap", hz.worst_gap},
                                      {"epsilon_grid", hz.epsilon_grid}}},
                                    {"weighted_area",
                                     {{"mantissa", area.mantissa}, {"exponent", area.exponent}, {"log", area.log()}}}});
    run.check(at_most("residual[n=" + std::to_string(coarse.n0()) + "]", r_coarse, c.residual_tolerance));
    run.check(at_most("residual[n=" + std::to_string(fine.n0()) + "]", r_fine, c.residual_tolerance));
    run.check(at_least("refinement_order", order, c.min_order));
    run.check(at_most("stationarity_relative", st.relative, c.stationarity_tolerance));
    run.check({"hzero", hz.pass, hz.worst_gap, 0.0, -hz.worst_gap, hz.epsilon_grid, ""});
    return exit_code::ok;
}

} // namespace

// ---- public API ------------------------------------------------------------------------

std::string to_string(Command c) {
    switch (c) {
    case Command::validate: return "validate";
    case Command::solve: return "solve";
    case Command::ladder: return "ladder";
    case Command::diagnose: return "diagnose";
    case Command::boundary: return "boundary";
    case Command::soliton: return "soliton";
    }
    return "?";
}

Command command_from_string(const std::string& name) {
    for (Command c : {Command::validate, Command::solve, Command::ladder, Command::diagnose, Command::boundary,
                      Command::soliton}) {
        if (to_string(c) == name) return c;
    }
    throw ConfigError("unknown command '" + name + "'");
}

BoundaryMotionSpec BoundaryConfig::spec() const {
    BoundaryMotionSpec s;
    if (shape == "lens") s = BoundaryMotionSpec::lens(radius, offset);
    else if (shape == "degenerate_lens") s = BoundaryMotionSpec::degenerate_lens(radius, offset);
    else if (shape == "square") s = BoundaryMotionSpec::square();
    else throw ConfigError("boundary.shape must be lens, degenerate_lens or square");
    s.motion = motion;
    s.horizon_coefficient = horizon_coefficient;
    s.horizon_exponent = horizon_exponent;
    s.reach_margin = reach_margin;
    return s;
}

RunConfig parse_config(std::istream& in) {
    Table t(in);
    RunConfig c;

    std::string kind = "disk";
    t.text("domain.kind", kind);
    DomainSpec& d = c.domain;
    int dimension = 0;
    t.integer("domain.dimension", dimension);
    try {
        switch (domain_kind_from_string(kind)) {
        case DomainSpec::Kind::disk: d = DomainSpec::disk(1.0); break;
        case DomainSpec::Kind::ellipse: d = DomainSpec::ellipse(1.0, 1.0); break;
        case DomainSpec::Kind::axisym_dumbbell: d = DomainSpec::dumbbell(); break;
        case DomainSpec::Kind::lens: d = DomainSpec::lens(); break;
        }
    } catch (const SpecificationError& e) {
        throw ConfigError(e.what());
    }
    if (dimension != 0) d.dimension = dimension;
    t.real("domain.radius", d.radius);
    t.real("domain.center_x", d.center_x);
    t.real("domain.center_y", d.center_y);
    t.real("domain.semi_axis_0", d.semi_axis_0);
    t.real("domain.semi_axis_1", d.semi_axis_1);
    t.real("domain.bulb_radius", d.bulb_radius);
    t.real("domain.bulb_center", d.bulb_center);
    t.real("domain.neck_radius", d.neck_radius);
    t.real("domain.neck_arc_radius", d.neck_arc_radius);
    t.real("domain.blend_start", d.blend_start);
    t.real("domain.blend_width", d.blend_width);
    t.real("domain.lens_offset", d.lens_offset);

    t.integer("grid.n", c.grid.n);
    t.integer("grid.n1", c.grid.n1);
    t.real("grid.margin", c.grid.margin);

    SolverConfig& s = c.solver;
    t.reals("solver.schedule", s.schedule);
    t.real("solver.lambda", s.lambda);
    t.real("solver.tolerance", s.tolerance);
    t.integer("solver.max_iterations", s.max_iterations);
    std::string scheme = to_string(s.scheme);
    t.text("solver.scheme", scheme);
    s.scheme = scheme_from_string(scheme);
    t.text("solver.uniqueness", s.uniqueness);
    t.real("solver.perturbation", s.perturbation);
    t.integer("solver.seed", s.seed);

    DiagnosticsConfig& g = c.diagnostics;
    t.text("diagnostics.field", g.field);
    t.text("diagnostics.k_kind", g.k_kind);
    t.real("diagnostics.k_fraction", g.k_fraction);
    t.real("diagnostics.k_inner", g.k_inner);
    t.real("diagnostics.k_outer", g.k_outer);
    t.reals("diagnostics.nested_levels", g.nested_levels);
    t.real("diagnostics.epsilon_limit", g.epsilon_limit);
    t.flag("diagnostics.exact_arrival", g.exact_arrival);
    t.real("diagnostics.exact_radius", g.exact_radius);
    t.real("diagnostics.exact_tolerance", g.exact_tolerance);
    t.real("diagnostics.arrival_tolerance", g.arrival_tolerance);
    t.real("diagnostics.umbilicity_tolerance", g.umbilicity_tolerance);
    t.real("diagnostics.expected_ratio", g.expected_ratio);
    t.real("diagnostics.ratio_tolerance", g.ratio_tolerance);
    t.integer("diagnostics.product_probes", g.product_probes);
    t.integer("diagnostics.seed", g.seed);
    t.text("diagnostics.expect_type", g.expect_type);
    t.real("diagnostics.expect_plane", g.expect_plane);
    t.real("diagnostics.plane_tolerance", g.plane_tolerance);
    t.real("diagnostics.type_tolerance", g.type_tolerance);

    BoundaryConfig& b = c.boundary;
    for (const char* key : {"shape", "radius", "offset", "motion", "horizon_coefficient", "horizon_exponent",
                            "reach_margin", "chord_tolerance"}) {
        b.present = b.present || t.has(std::string("boundary.") + key);
    }
    t.text("boundary.shape", b.shape);
    t.real("boundary.radius", b.radius);
    t.real("boundary.offset", b.offset);
    std::vector<std::array<double, 3>> motion;
    t.triples("boundary.motion", motion);
    if (!motion.empty()) {
        b.motion.clear();
        for (const auto& m : motion) b.motion.push_back({m[0], m[1], m[2]});
    }
    t.real("boundary.horizon_coefficient", b.horizon_coefficient);
    t.real("boundary.horizon_exponent", b.horizon_exponent);
    t.real("boundary.reach_margin", b.reach_margin);
    t.real("boundary.chord_tolerance", b.chord_tolerance);

    SolitonConfig& so = c.soliton;
    t.text("soliton.family", so.family);
    t.real("soliton.speed", so.speed);
    t.integer("soliton.nodes", so.nodes);
    t.real("soliton.extent", so.extent);
    t.integer("soliton.trials", so.trials);
    t.integer("soliton.seed", so.seed);
    t.integer("soliton.hzero_sets", so.hzero_sets);
    t.real("soliton.residual_tolerance", so.residual_tolerance);
    t.real("soliton.min_order", so.min_order);
    t.real("soliton.stationarity_tolerance", so.stationarity_tolerance);

    t.text("output.dir", c.out_dir);
    t.reject_unused();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration '" + path + "'");
    RunConfig c = parse_config(in);
    // Relative field paths are resolved against the configuration file.
    if (!c.diagnostics.field.empty() && fs::path(c.diagnostics.field).is_relative()) {
        c.diagnostics.field = (fs::path(path).parent_path() / c.diagnostics.field).string();
    }
    return c;
}

void validate(const RunConfig& c) {
    const auto& sched = c.solver.schedule;
    if (sched.empty()) throw ConfigError("solver.schedule is empty");
    for (std::size_t k = 0; k < sched.size(); ++k) {
        if (!(sched[k] > 0.0)) throw ConfigError("solver.schedule entries must be positive");
        if (k > 0 && !(sched[k] > sched[k - 1])) throw ConfigError("solver.schedule must be strictly increasing");
    }
    if (!std::isnan(c.solver.lambda) && !(c.solver.lambda > 0.0)) throw ConfigError("solver.lambda must be positive");
    if (!(c.solver.tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
    if (c.solver.max_iterations < 1) throw ConfigError("solver.max_iterations must be at least 1");
    if (c.solver.uniqueness != "none" && c.solver.uniqueness != "final" && c.solver.uniqueness != "all") {
        throw ConfigError("solver.uniqueness must be none, final or all");
    }
    if (!(c.solver.perturbation >= 0.0)) throw ConfigError("solver.perturbation must be nonnegative");
    if (c.grid.n < 64 || (c.grid.n1 != 0 && c.grid.n1 < 64)) {
        throw ConfigError("grid resolution must be at least 64 nodes per axis");
    }
    if (!(c.grid.margin >= 0.0)) throw ConfigError("grid.margin must be nonnegative");
    const DiagnosticsConfig& g = c.diagnostics;
    if (g.k_kind != "superlevel" && g.k_kind != "annulus") throw ConfigError("diagnostics.k_kind must be superlevel or annulus");
    if (!(g.k_fraction > 0.0 && g.k_fraction < 1.0)) throw ConfigError("diagnostics.k_fraction must lie in (0, 1)");
    if (!(g.k_inner >= 0.0 && g.k_outer > g.k_inner)) throw ConfigError("diagnostics.k_inner < k_outer required");
    if (g.nested_levels.empty()) throw ConfigError("diagnostics.nested_levels is empty");
    for (double l : g.nested_levels) {
        if (!(l > 0.0 && l < 1.0)) throw ConfigError("diagnostics.nested_levels entries must lie in (0, 1)");
    }
    if (g.product_probes < 1) throw ConfigError("diagnostics.product_probes must be positive");
    if (!g.expect_type.empty() && g.expect_type != "sphere" && g.expect_type != "cylinder") {
        throw ConfigError("diagnostics.expect_type must be sphere or cylinder");
    }
    if (g.exact_arrival && c.domain.kind != DomainSpec::Kind::disk) {
        throw ConfigError("diagnostics.exact_arrival needs a disk or ball domain");
    }
    try {
        c.domain.validate();
    } catch (const SpecificationError& e) {
        throw ConfigError(std::string("domain: ") + e.what());
    }
    if (c.domain.dimension != 2 && c.domain.dimension != 3) throw ConfigError("domain.dimension must be 2 or 3");
    const BoundaryConfig& b = c.boundary;
    if (b.present) {
        (void)b.spec();
        if (!(b.reach_margin > 0.0 && b.reach_margin < 1.0)) throw ConfigError("boundary.reach_margin must lie in (0, 1)");
        if (!(b.horizon_coefficient > 0.0)) throw ConfigError("boundary.horizon_coefficient must be positive");
    }
    const SolitonConfig& s = c.soliton;
    if (s.family != "grim_reaper" && s.family != "bowl") throw ConfigError("soliton.family must be grim_reaper or bowl");
    if (!(s.speed > 0.0)) throw ConfigError("soliton.speed must be positive");
    if (s.nodes < 64) throw ConfigError("soliton.nodes must be at least 64");
    if (s.trials < 1 || s.hzero_sets < 1) throw ConfigError("soliton.trials and soliton.hzero_sets must be positive");
    if (!std::isnan(s.extent) && !(s.extent > 0.0)) throw ConfigError("soliton.extent must be positive");
}

void apply_overrides(RunConfig& c, const Overrides& o) {
    if (o.out) c.out_dir = *o.out;
    if (o.grid_n) {
        if (c.grid.n1 != 0) {
            c.grid.n1 = static_cast<int>(std::lround(static_cast<double>(c.grid.n1) * *o.grid_n / c.grid.n));
        }
        c.grid.n = *o.grid_n;
    }
    if (o.lambda_max) {
        const double top = *o.lambda_max;
        if (!(top > 0.0)) throw ConfigError("--lambda-max must be positive");
        auto& s = c.solver.schedule;
        s.erase(std::remove_if(s.begin(), s.end(), [&](double x) { return x > top; }), s.end());
        if (s.empty() || s.back() < top) s.push_back(top);
        if (!std::isnan(c.solver.lambda)) c.solver.lambda = std::min(c.solver.lambda, top);
    }
    validate(c);
}

Grid make_grid(const RunConfig& c) {
    const Box box = bounding_box(c.domain);
    const double m = c.grid.margin;
    if (c.domain.dimension == 2) {
        const int n1 = c.grid.n1 != 0 ? c.grid.n1 : c.grid.n;
        return Grid::cartesian(c.grid.n, n1, box.lo[0] - m, box.hi[0] + m, box.lo[1] - m, box.hi[1] + m);
    }
    const double r_max = box.hi[0] + m;
    const double z0 = box.lo[1] - m;
    const double z1 = box.hi[1] + m;
    if (c.grid.n1 != 0) return Grid::axisym(c.grid.n, c.grid.n1, r_max, z0, z1);
    const double d = r_max / (c.grid.n - 1);
    int nz = static_cast<int>(std::floor((z1 - z0) / d + 1e-9)) + 1;
    if (nz % 2 == 0) ++nz;
    const double mid = 0.5 * (z0 + z1);
    const double half = 0.5 * d * (nz - 1);
    return Grid::axisym(c.grid.n, nz, r_max, mid - half, mid + half);
}

Grid make_boundary_grid(const RunConfig& c, const BoundaryMotionSpec& spec) {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const BoundaryChain* chain : {&spec.sigma, &spec.sigma_prime}) {
        for (const Vec2& p : chain->sample(chain->length() / 2048.0)) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }
    const double m = c.grid.margin;
    const int n1 = c.grid.n1 != 0 ? c.grid.n1 : c.grid.n;
    return Grid::cartesian(c.grid.n, n1, lo[0] - m, hi[0] + m, lo[1] - m, hi[1] + m);
}

int run(Command command, const RunConfig& config) {
    Run r(command, config);
    try {
        int code = exit_code::ok;
        switch (command) {
        case Command::validate: code = cmd_validate(r, config); break;
        case Command::solve: code = cmd_solve(r, config); break;
        case Command::ladder: code = cmd_ladder(r, config); break;
        case Command::diagnose: code = cmd_diagnose(r, config); break;
        case Command::boundary: code = cmd_boundary(r, config); break;
        case Command::soliton: code = cmd_soliton(r, config); break;
        }
        return r.finish(code);
    } catch (const ConfigError& e) {
        return r.finish(exit_code::config, e.what());
    } catch (const SpecificationError& e) {
        return r.finish(exit_code::config, e.what());
    } catch (const ResolutionError& e) {
        return r.finish(exit_code::config, e.what());
    } catch (const ParameterError& e) {
        return r.finish(exit_code::config, e.what());
    } catch (const PreconditionError& e) {
        return r.finish(exit_code::invariant, e.what());
    } catch (const DegenerateOutputError& e) {
        return r.finish(exit_code::invariant, e.what());
    } catch (const NumericError& e) {
        // NonConvergenceError and LadderError: partial artifacts are already on disk.
        return r.finish(exit_code::nonconvergence, e.what());
    } catch (const Error& e) {
        return r.finish(exit_code::invariant, e.what());
    }
}

int main(int argc, char** argv) {
    CLI::App app{"Elliptic regularization experiments for mean curvature flow", "mcflab"};
    std::string command;
    std::string config_path;
    Overrides o;
    app.add_option("command", command, "validate | solve | ladder | diagnose | boundary | soliton")->required();
    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--out", o.out, "output directory (overrides output.dir)");
    app.add_option("--grid-n", o.grid_n, "grid resolution along axis 0");
    app.add_option("--lambda-max", o.lambda_max, "largest lambda of the schedule");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::config;
    }
    RunConfig config;
    Command cmd;
    try {
        cmd = command_from_string(command);
        config = load_config(config_path);
        apply_overrides(config, o);
    } catch (const Error& e) {
        std::cerr << "mcflab: " << e.what() << '\n';
        return exit_code::config;
    }
    const int code = run(cmd, config);
    if (code != exit_code::ok) {
        std::cerr << "mcflab: " << to_string(cmd) << " finished with exit code " << code << " (see "
                  << (fs::path(config.out_dir) / "run.json").string() << ")\n";
    }
    return code;
}

} // namespace mcf::cli
