#include <doctest.h>

#include <cmath>

#include "mcf/regularize.hpp"
#include "mcf/singular.hpp"

using namespace mcf;

TEST_CASE("disk ladder: one extinction candidate at the origin, sphere type") {
    const Grid g = Grid::cartesian(129, 129, -1.1, 1.1, -1.1, 1.1);
    const LadderResult l = lambda_ladder(DomainSpec::disk(1.0), g, {4, 8, 16, 32, 64});
    const SingularityReport r = classify_tangent(detect_singular(l), u_lambda(l.solutions.back()));
    REQUIRE(r.candidates.size() == 1);
    const SingularCandidate& c = r.candidates.front();
    CHECK(c.centroid.norm() < 0.05);
    CHECK(c.blowup_increasing);
    CHECK(c.type == TangentType::sphere);
    CHECK(c.limit_first == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ball ladder: extinction at the origin with ratios (0.5, 0.5)") {
    const Grid g = Grid::axisym(97, 193, 1.1, -1.1, 1.1);
    const LadderResult l = lambda_ladder(DomainSpec::ball(1.0), g, {4, 8, 16, 32, 64});
    const SingularityReport r = classify_tangent(detect_singular(l), u_lambda(l.solutions.back()));
    REQUIRE(r.candidates.size() == 1);
    const SingularCandidate& c = r.candidates.front();
    CHECK(c.on_axis);
    CHECK(std::abs(c.centroid[1]) < 0.05);
    CHECK(c.type == TangentType::sphere);
    CHECK(std::abs(c.limit_first - 0.5) <= 0.05);
    CHECK(std::abs(c.limit_last - 0.5) <= 0.05);
    CHECK(axis_candidates_near(r, 0.0, 0.25).size() == 1);
    CHECK(axis_candidates_near(r, 0.8, 0.25).empty());
}

TEST_CASE("neck-shaped arrival field classifies as a cylinder") {
    // Near-cylindrical saddle: critical on the axis at z = 0, level sets close to cylinders nearby.
    const Grid g = Grid::axisym(97, 193, 1.1, -1.1, 1.1);
    const ScalarField mask = ScalarField::from_function(g, [](const Vec2&) { return 0.0; });
    std::vector<double> lambdas{16.0, 32.0, 64.0};
    std::vector<ScalarField> fields;
    for (int k = 0; k < 3; ++k) {
        fields.push_back(ScalarField::from_function(g, mask.mask(), [](const Vec2& x) {
            return 0.5 * (1.0 - x[0] * x[0]) + 0.02 * x[1] * x[1];
        }));
    }
    const SingularityReport r = classify_tangent(detect_singular(lambdas, fields), fields.back());
    const auto near = axis_candidates_near(r, 0.0, 0.25);
    REQUIRE(near.size() == 1);
    CHECK(near.front()->type == TangentType::cylinder);
    CHECK(std::abs(near.front()->limit_first) <= 0.05);
    CHECK(std::abs(near.front()->limit_last - 1.0) <= 0.05);
}

TEST_CASE("detection needs matching inputs") {
    const Grid g = Grid::cartesian(65, 65, -1.0, 1.0, -1.0, 1.0);
    const ScalarField u = ScalarField::from_function(g, [](const Vec2& x) { return 1.0 - x.squaredNorm(); });
    CHECK_THROWS(detect_singular({64.0}, {u, u}));
}
