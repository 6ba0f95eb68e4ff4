#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "mcf/arrival.hpp"
#include "mcf/regularize.hpp"

using namespace mcf;

namespace {

ScalarField disk_arrival(int n, double scale = 1.0) {
    const Grid g = Grid::cartesian(n, n, -1.1, 1.1, -1.1, 1.1);
    const ScalarField m = build_mask(DomainSpec::disk(1.0), g);
    return ScalarField::from_function(g, m.mask(), [&](const Vec2& x) { return scale * 0.5 * (1.0 - x.squaredNorm()); });
}

ScalarField ball_arrival(int nr) {
    const Grid g = Grid::axisym(nr, 2 * nr - 1, 1.1, -1.1, 1.1);
    const ScalarField m = build_mask(DomainSpec::ball(1.0), g);
    return ScalarField::from_function(g, m.mask(), [](const Vec2& x) { return 0.25 * (1.0 - x.squaredNorm()); });
}

ScalarField cylinder_arrival(int nr) {
    const Grid g = Grid::axisym(nr, 2 * nr - 1, 1.1, -1.1, 1.1);
    return ScalarField::from_function(g, [](const Vec2& x) { return 0.5 * (1.0 - x[0] * x[0]); });
}

NodeIndex at(const Grid& g, double x, double y) {
    return {static_cast<int>(std::lround((x - g.origin(0)) / g.spacing(0))),
            static_cast<int>(std::lround((y - g.origin(1)) / g.spacing(1)))};
}

NodeSet shell(const ScalarField& u, double inner, double outer) {
    NodeSet K = ball_set(u, Vec2::Zero(), outer);
    const NodeSet in = ball_set(u, Vec2::Zero(), inner);
    for (std::size_t k = 0; k < K.size(); ++k) K[k] = K[k] && !in[k];
    return K;
}

} // namespace

TEST_CASE("sphere arrival: umbilic level sets") {
    const ScalarField u = ball_arrival(221); // spacing 0.005, node at r = 0.5
    const CurvatureDiagnostics d = level_set_curvatures(u, at(u.grid(), 0.5, 0.0), regularity_threshold(u.grid()));
    REQUIRE(d.regular);
    REQUIRE(d.kappa.size() == 2);
    CHECK(d.kappa[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(d.kappa[1] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(d.h == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d.ratio == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(d.grad_norm == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(d.h * d.grad_norm == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cylinder arrival: ratios 0 and 1") {
    const ScalarField u = cylinder_arrival(221);
    const CurvatureDiagnostics d = level_set_curvatures(u, at(u.grid(), 0.5, 0.3), regularity_threshold(u.grid()));
    REQUIRE(d.regular);
    CHECK(std::abs(d.kappa_first()) < 1e-9);
    CHECK(d.kappa_last() == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(d.h == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::abs(d.ratio) < 1e-9);
}

TEST_CASE("circle arrival: one curvature, ratio 1") {
    const ScalarField u = disk_arrival(221); // spacing 0.01, node at x = 0.25
    const CurvatureDiagnostics d = level_set_curvatures(u, at(u.grid(), 0.25, 0.0), regularity_threshold(u.grid()));
    REQUIRE(d.kappa.size() == 1);
    CHECK(d.kappa[0] == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d.h == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(d.ratio == doctest::Approx(1.0));
}

TEST_CASE("arrival residual of exact and scaled fields") {
    const ScalarField u = disk_arrival(256);
    const double eps = regularity_threshold(u.grid());
    CHECK(arrival_residual(u, shell(u, 0.1, 0.9), eps) <= 5e-3);
    const ScalarField u2 = disk_arrival(256, 2.0);
    CHECK(arrival_residual(u2, shell(u2, 0.1, 0.9), eps) >= 0.5);
}

TEST_CASE("arrival residual refuses non-regular nodes") {
    const ScalarField u = disk_arrival(128);
    CHECK_THROWS_AS(arrival_residual(u, ball_set(u, Vec2::Zero(), 0.5), regularity_threshold(u.grid())),
                    PreconditionError);
}

TEST_CASE("arrival residual of the disk ladder at lambda = 64") {
    const Grid g = Grid::cartesian(129, 129, -1.1, 1.1, -1.1, 1.1);
    const LadderResult l = lambda_ladder(DomainSpec::disk(1.0), g, {4, 8, 16, 32, 64});
    const ScalarField u = u_lambda(l.solutions.back());
    CHECK(arrival_residual(u, shell(u, 0.3, 0.9), regularity_threshold(g)) <= 0.05);
}

TEST_CASE("product lift") {
    CurvatureDiagnostics sphere;
    sphere.kappa = {2.0, 2.0};
    sphere.h = 4.0;
    const CurvatureDiagnostics lifted = product_lift(sphere);
    CHECK(lifted.kappa_first() == 0.0);
    CHECK(lifted.h == 4.0);
    CurvatureDiagnostics saddle;
    saddle.kappa = {-1.0, 3.0};
    saddle.h = 2.0;
    CHECK(product_lift(saddle).kappa_first() == -1.0);

    const ScalarField u = ball_arrival(111);
    const auto diags = diagnose_field(u, regularity_threshold(u.grid()));
    std::vector<NodeIndex> probes;
    for (std::size_t k = 0; k < diags.size() && probes.size() < 100; k += 37) {
        if (diags[k].regular) probes.push_back(u.grid().node(k));
    }
    REQUIRE(probes.size() == 100);
    CHECK(product_lift_check(u, probes, regularity_threshold(u.grid())) == 0.0);
}

TEST_CASE("ratio bound on exact sphere and cylinder arrivals") {
    const ScalarField s = ball_arrival(111);
    const double eps = regularity_threshold(s.grid());
    const RatioBound rs = ratio_bound_check(s, shell(s, 0.3, 0.9), eps);
    CHECK(rs.pass);
    CHECK(rs.interior_min == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(rs.boundary_min == doctest::Approx(0.5).epsilon(1e-3));
    const ScalarField c = cylinder_arrival(111);
    NodeSet K(c.grid().size(), 0);
    for (std::size_t k = 0; k < K.size(); ++k) {
        const Vec2 x = c.grid().position(c.grid().node(k));
        K[k] = c.mask()[k] == NodeClass::interior && x[0] >= 0.2 && x[0] <= 0.8 && std::abs(x[1]) <= 0.5;
    }
    const RatioBound rc = ratio_bound_check(c, K, regularity_threshold(c.grid()));
    CHECK(rc.pass);
    CHECK(std::abs(rc.interior_min) < 1e-9);
    CHECK(std::abs(rc.boundary_min) < 1e-9);
}

TEST_CASE("umbilicity excess vanishes on round spheres") {
    const ScalarField u = ball_arrival(111);
    const auto diags = diagnose_field(u, regularity_threshold(u.grid()));
    CHECK(umbilicity_excess(diags) <= 1e-6);
}

TEST_CASE("resolution limits") {
    const Grid g = Grid::cartesian(101, 101, -1.0, 1.0, -1.0, 1.0);
    CHECK(h_max_resolvable(g) == doctest::Approx(1.0 / (4.0 * 0.02)));
    CHECK(regularity_threshold(g) == doctest::Approx(10.0 * 0.02));
}

TEST_CASE("curvature CSV columns") {
    const ScalarField u = disk_arrival(64);
    const auto diags = diagnose_field(u, regularity_threshold(u.grid()));
    const std::string path = (std::filesystem::temp_directory_path() / "mcflab_test_curvature.csv").string();
    write_curvature_csv(u, diags, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "axis0,axis1,kappa1,kappa_last,h,ratio,grad_norm,regular");
}

TEST_CASE("serial and parallel diagnostics agree") {
    const ScalarField u = ball_arrival(81);
    const double eps = regularity_threshold(u.grid());
    const auto a = diagnose_field(u, eps, Exec::serial);
    const auto b = diagnose_field(u, eps, Exec::parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].kappa == b[k].kappa);
        CHECK(a[k].regular == b[k].regular);
    }
}
