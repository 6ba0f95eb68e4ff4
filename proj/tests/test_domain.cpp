#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcf/domain.hpp"
#include "mcf/errors.hpp"

using namespace mcf;

TEST_CASE("disk membership and bounding box") {
    const DomainSpec d = DomainSpec::disk(1.0, 0.5, -0.5);
    CHECK(inside(d, Vec2(0.5, -0.5)));
    CHECK_FALSE(inside(d, Vec2(1.5, -0.5)));
    const Box b = bounding_box(d);
    CHECK(b.lo[0] == doctest::Approx(-0.5));
    CHECK(b.hi[1] == doctest::Approx(0.5));
}

TEST_CASE("invalid specifications are rejected") {
    DomainSpec d = DomainSpec::disk(1.0);
    d.radius = -1.0;
    CHECK_THROWS_AS(d.validate(), SpecificationError);
    DomainSpec b = DomainSpec::ball(1.0);
    b.center_x = 0.3;
    CHECK_THROWS_AS(b.validate(), SpecificationError);
    CHECK_THROWS_AS(domain_kind_from_string("torus"), SpecificationError);
}

TEST_CASE("disk and ball are mean convex with the expected curvature") {
    const ConvexityReport disk = validate_mean_convex(DomainSpec::disk(2.0), 512);
    CHECK(disk.pass);
    CHECK(disk.min_mean_curvature == doctest::Approx(0.5).epsilon(1e-6));
    const ConvexityReport ball = validate_mean_convex(DomainSpec::ball(1.0), 512);
    CHECK(ball.pass);
    CHECK(ball.min_mean_curvature == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("lens corners at (+-0.6, 0)") {
    const DomainSpec lens = DomainSpec::lens();
    const ConvexityReport r = validate_mean_convex(lens, 512);
    CHECK(r.pass);
    REQUIRE(r.corner_angles.size() == 2);
    const double expected = 2.0 * std::asin(0.6);
    CHECK(r.corner_angles[0] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(r.corner_angles[0] < std::numbers::pi);
    const Box b = bounding_box(lens);
    CHECK(b.hi[0] == doctest::Approx(0.6));
    CHECK(b.hi[1] == doctest::Approx(0.2));
}

TEST_CASE("default dumbbell is mean convex and thinnest at the neck") {
    const DomainSpec d = DomainSpec::dumbbell();
    const ConvexityReport r = validate_mean_convex(d, 4096);
    CHECK(r.pass);
    const DumbbellProfile p(d);
    CHECK(p.radius_at(0.0) == doctest::Approx(0.35));
    for (double z = 0.05; z < 2.0; z += 0.05) CHECK(p.radius_at(z) > p.radius_at(0.0));
    CHECK(p.tip_z() == doctest::Approx(3.0));
}

TEST_CASE("dumbbell fillet is C2 at both ends") {
    const DumbbellProfile p(DomainSpec::dumbbell());
    for (double z : {p.blend_start(), p.blend_end()}) {
        const auto a = p.at(z - 1e-9);
        const auto b = p.at(z + 1e-9);
        CHECK(a.r == doctest::Approx(b.r).epsilon(1e-7));
        CHECK(a.dr == doctest::Approx(b.dr).epsilon(1e-6));
        CHECK(a.ddr == doctest::Approx(b.ddr).epsilon(1e-5));
    }
}

TEST_CASE("mask: interior nodes have interior or boundary neighbours only") {
    const DomainSpec d = DomainSpec::disk(1.0);
    const Grid g = Grid::cartesian(65, 65, -1.1, 1.1, -1.1, 1.1);
    const ScalarField m = build_mask(d, g);
    CHECK(m.count(NodeClass::interior) > 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (m.mask()[k] != NodeClass::interior) continue;
        const NodeIndex n = g.node(k);
        CHECK(inside(d, g.position(n)));
        for (int a = -1; a <= 1; ++a) {
            for (int b = -1; b <= 1; ++b) CHECK(m.node_class({n.i + a, n.j + b}) != NodeClass::outside);
        }
    }
    for (double v : m.values()) CHECK(v == 0.0);
}

TEST_CASE("mask: too coarse or too tight grids are resolution errors") {
    const DomainSpec d = DomainSpec::disk(1.0);
    CHECK_THROWS_AS(build_mask(d, Grid::cartesian(65, 65, -0.9, 0.9, -0.9, 0.9)), ResolutionError);
    CHECK_THROWS_AS(build_mask(d, Grid::cartesian(3, 3, -1.5, 1.5, -1.5, 1.5)), ResolutionError);
    CHECK_THROWS_AS(build_mask(DomainSpec::ball(1.0), Grid::cartesian(65, 65, -1.1, 1.1, -1.1, 1.1)),
                    SpecificationError);
}
