#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "mcf/regularize.hpp"

using namespace mcf;

namespace {

Grid disk_grid(int n) { return Grid::cartesian(n, n, -1.1, 1.1, -1.1, 1.1); }

const LadderResult& disk_ladder() {
    static const LadderResult ladder = lambda_ladder(DomainSpec::disk(1.0), disk_grid(128), {4, 8, 16, 32, 64});
    return ladder;
}

/// Radially symmetric f_lambda on the unit disk: f'' = -(1 + f'^2)(lambda + f'/rho), f'(0) = 0,
/// f(1) = 0. f enters only through derivatives, so one integration from the centre suffices.
double radial_center_value(double lambda) {
    using State = std::array<double, 2>;
    const double rho0 = 1e-6;
    State x{0.0, -0.5 * lambda * rho0};
    namespace ode = boost::numeric::odeint;
    ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()),
                            [lambda](const State& s, State& d, double rho) {
                                d[0] = s[1];
                                d[1] = -(1.0 + s[1] * s[1]) * (lambda + s[1] / rho);
                            },
                            x, rho0, 1.0, 1e-4);
    return -x[0];
}

double sup_diff_interior(const ScalarField& a, const ScalarField& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        if (a.mask()[k] == NodeClass::interior) worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
    }
    return worst;
}

NodeIndex nearest(const Grid& g, const Vec2& x) {
    return {static_cast<int>(std::lround((x[0] - g.origin(0)) / g.spacing(0))),
            static_cast<int>(std::lround((x[1] - g.origin(1)) / g.spacing(1)))};
}

} // namespace

TEST_CASE("disk ladder: centre value at lambda = 64") {
    const LadderResult& l = disk_ladder();
    const RegularizedSolution& s = l.solutions.back();
    const NodeIndex c = nearest(s.f.grid(), Vec2::Zero());
    CHECK(std::abs(s.f.value(c) / 64.0 - 0.5) <= 0.02);
    CHECK(s.residual <= 1e-8);
}

TEST_CASE("disk ladder: successive differences strictly decrease") {
    const auto& d = disk_ladder().successive_differences;
    REQUIRE(d.size() == 4);
    for (std::size_t k = 1; k < d.size(); ++k) CHECK(d[k] < d[k - 1]);
}

TEST_CASE("disk ladder: positivity, Dirichlet values, mean curvature identity") {
    for (const RegularizedSolution& s : disk_ladder().solutions) {
        const ScalarField u = u_lambda(s);
        for (std::size_t k = 0; k < u.values().size(); ++k) {
            if (u.mask()[k] == NodeClass::interior) CHECK(u.values()[k] > 0.0);
            if (u.mask()[k] == NodeClass::boundary) CHECK(u.values()[k] == 0.0);
        }
        CHECK(mean_curvature_identity_defect(s) <= 1e-6);
    }
    const RegularizedSolution& s = disk_ladder().solutions.back();
    const NodeIndex probe = nearest(s.f.grid(), Vec2(0.5, 0.0));
    const CurvatureDiagnostics cd = graph_curvatures(s, probe);
    const double W = std::sqrt(1.0 + cd.grad_norm * cd.grad_norm);
    CHECK(cd.h * W / 64.0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("disk ladder: gradient maximum and translator inequality on nested sets") {
    for (const RegularizedSolution& s : disk_ladder().solutions) {
        const ScalarField u = u_lambda(s);
        for (double level : {0.05, 0.25, 0.45, 0.65, 0.85}) CHECK(gradient_boundary_max(s.f, superlevel_set(u, level)).pass);
        const InequalityCheck r = translator_ratio_inequality(s.f, superlevel_set(u, 0.05));
        CHECK(r.pass);
        CHECK(r.epsilon_grid >= 0.0);
    }
}

TEST_CASE("converged solution is a fixed point") {
    const RegularizedSolution& s = disk_ladder().solutions.back();
    const RegularizedSolution again = solve_translator_graph(DomainSpec::disk(1.0), s.f, 64.0, &s.f);
    CHECK(again.iterations == 0);
    CHECK(again.f.values() == s.f.values());
}

TEST_CASE("radial oracle: the error shrinks under refinement") {
    const double lambda = 8.0;
    const double oracle = radial_center_value(lambda) / lambda;
    // Dirichlet data sit on the first outside nodes, so the error is O(spacing), not O(spacing^2).
    double previous = 1.0;
    for (int n : {64, 128, 256}) {
        const LadderResult l = lambda_ladder(DomainSpec::disk(1.0), disk_grid(n + 1), {4, 8});
        const RegularizedSolution& s = l.solutions.back();
        const double err = std::abs(s.f.value(nearest(s.f.grid(), Vec2::Zero())) / lambda - oracle);
        MESSAGE("n " << n << " centre error " << err);
        CHECK(err * 1.4 < previous);
        CHECK(err <= s.f.grid().spacing(0));
        previous = err;
    }
}

TEST_CASE("unit ball on an axisymmetric grid") {
    const Grid g = Grid::axisym(65, 129, 1.1, -1.1, 1.1);
    const LadderResult l = lambda_ladder(DomainSpec::ball(1.0), g, {4, 8, 16, 32, 64});
    const RegularizedSolution& s = l.solutions.back();
    CHECK(std::abs(s.f.value(nearest(g, Vec2::Zero())) / 64.0 - 0.25) <= 0.02);
    CHECK(mean_curvature_identity_defect(s) <= 1e-6);
}

TEST_CASE("comparison: ordered boundary data give ordered solutions") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const Grid g = disk_grid(97);
    const ScalarField mask = build_mask(d, g);
    std::vector<double> high = mask.values();
    for (std::size_t k = 0; k < high.size(); ++k) {
        if (mask.mask()[k] == NodeClass::boundary) high[k] = 0.3 * (1.2 + g.position(g.node(k))[0]);
    }
    const ScalarField g2 = mask.with_values(high);
    const RegularizedSolution lo = solve_translator_graph(d, mask, 8.0);
    const RegularizedSolution hi = solve_translator_graph(d, g2, 8.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (mask.mask()[k] == NodeClass::outside) continue;
        CHECK(lo.f.values()[k] <= hi.f.values()[k] + 1e-12);
    }
}

TEST_CASE("uniqueness: a perturbed start converges to the same solution") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const ScalarField mask = build_mask(d, disk_grid(97));
    const RegularizedSolution s = solve_translator_graph(d, mask, 8.0);
    double top = 0.0;
    for (double v : s.f.values()) top = std::max(top, v);
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    std::vector<double> v = s.f.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double e = noise(rng);
        if (mask.mask()[k] == NodeClass::interior) v[k] += 0.1 * top * e;
    }
    const ScalarField init = s.f.with_values(v);
    const RegularizedSolution t = solve_translator_graph(d, mask, 8.0, &init);
    CHECK(sup_diff_interior(u_lambda(s), u_lambda(t)) <= 1e-7);
}

TEST_CASE("ladder bookkeeping and parameter errors") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const Grid g = disk_grid(65);
    const LadderResult one = lambda_ladder(d, g, {4});
    CHECK(one.successive_differences.empty());
    CHECK(one.solutions.size() == 1);
    CHECK_THROWS_AS(lambda_ladder(d, g, {8, 4}), ParameterError);
    CHECK_THROWS_AS(lambda_ladder(d, g, {}), ParameterError);
    CHECK_THROWS_AS(solve_translator_graph(d, g, 0.0), ParameterError);
    CHECK_THROWS_AS(solve_translator_graph(d, g, -2.0), ParameterError);
}

TEST_CASE("non-convergence carries the iterate; ladder errors carry partial results") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const Grid g = disk_grid(65);
    SolverOptions o;
    o.max_iterations = 1;
    try {
        (void)solve_translator_graph(d, g, 16.0, nullptr, o);
        FAIL("expected non-convergence");
    } catch (const NonConvergenceError& e) {
        CHECK(e.iterate().grid() == g);
        CHECK(e.residual() > o.tolerance);
    }
    try {
        (void)lambda_ladder(d, g, {4, 8}, nullptr, o);
        FAIL("expected a ladder error");
    } catch (const LadderError& e) {
        CHECK(e.lambda() == 4.0);
        REQUIRE(e.partial() != nullptr);
        CHECK(e.partial()->solutions.empty());
        CHECK(e.iterate() != nullptr);
    }
}

TEST_CASE("graph curvatures of a plane and of a paraboloid cap") {
    const Grid g = disk_grid(65);
    const ScalarField plane = ScalarField::from_function(g, [](const Vec2&) { return 0.0; });
    const CurvatureDiagnostics p = graph_curvatures(plane, {32, 32});
    CHECK(p.kappa_first() == 0.0);
    CHECK(p.kappa_last() == 0.0);
    CHECK_FALSE(p.regular);
    const double c = 0.75;
    const ScalarField cap = ScalarField::from_function(g, [&](const Vec2& x) { return c * (1.0 - x.squaredNorm()); });
    const CurvatureDiagnostics a = graph_curvatures(cap, {32, 32});
    CHECK(a.kappa_first() == doctest::Approx(2.0 * c));
    CHECK(a.kappa_last() == doctest::Approx(2.0 * c));
    CHECK(a.ratio == doctest::Approx(0.5));
}

TEST_CASE("u_lambda is f / lambda") {
    const Grid g = disk_grid(65);
    const ScalarField f = ScalarField::from_function(g, [](const Vec2&) { return 12.0; });
    RegularizedSolution s;
    s.lambda = 4.0;
    s.f = f;
    const ScalarField u = u_lambda(s);
    for (double v : u.values()) CHECK(v == 3.0);
}

TEST_CASE("serial and parallel solves are bit-identical") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const Grid g = disk_grid(65);
    SolverOptions serial;
    serial.exec = Exec::serial;
    SolverOptions parallel;
    parallel.exec = Exec::parallel;
    const RegularizedSolution a = solve_translator_graph(d, g, 8.0, nullptr, serial);
    const RegularizedSolution b = solve_translator_graph(d, g, 8.0, nullptr, parallel);
    CHECK(a.f.values() == b.f.values());
    CHECK(translator_graph_residual(a.f, 8.0, Exec::serial) == translator_graph_residual(a.f, 8.0, Exec::parallel));
}

TEST_CASE("conservative scheme agrees with the non-divergence scheme") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const Grid g = disk_grid(129);
    SolverOptions cons;
    cons.scheme = SolverOptions::Scheme::conservative;
    const LadderResult a = lambda_ladder(d, g, {4, 8});
    const LadderResult b = lambda_ladder(d, g, {4, 8}, nullptr, cons);
    CHECK(sup_diff_interior(u_lambda(a.solutions.back()), u_lambda(b.solutions.back())) <= 0.01);
    CHECK_THROWS_AS(solve_translator_graph(DomainSpec::ball(1.0), Grid::axisym(65, 129, 1.1, -1.1, 1.1), 4.0, nullptr, cons),
                    SpecificationError);
}
