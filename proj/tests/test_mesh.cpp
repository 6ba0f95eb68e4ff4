#include <doctest.h>

#include <sstream>

#include "mcf/errors.hpp"
#include "mcf/mesh.hpp"

using namespace mcf;

TEST_CASE("grid indexing is row-major in (i, j)") {
    const Grid g = Grid::cartesian(4, 3, 0.0, 3.0, 0.0, 2.0);
    CHECK(g.size() == 12);
    CHECK(g.index(2, 1) == 7);
    CHECK(g.node(7) == NodeIndex{2, 1});
    CHECK(g.position({3, 2})[0] == doctest::Approx(3.0));
    CHECK(g.position({3, 2})[1] == doctest::Approx(2.0));
    CHECK(g.max_spacing() == doctest::Approx(1.0));
}

TEST_CASE("derivatives of quadratics are exact on cartesian grids") {
    const Grid g = Grid::cartesian(9, 9, -1.0, 1.0, -1.0, 1.0);
    const ScalarField f = ScalarField::from_function(g, [](const Vec2& x) {
        return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1] * x[1];
    });
    const NodeIndex n{5, 3};
    const Vec2 x = g.position(n);
    const Vec2 grad = gradient(f, n);
    CHECK(grad[0] == doctest::Approx(2.0 + x[0] + 3.0 * x[1]));
    CHECK(grad[1] == doctest::Approx(-1.0 + 3.0 * x[0] - 4.0 * x[1]));
    const Mat2 H = hessian(f, n);
    CHECK(H(0, 0) == doctest::Approx(1.0));
    CHECK(H(1, 1) == doctest::Approx(-4.0));
    CHECK(H(0, 1) == doctest::Approx(3.0));
    CHECK(H(1, 0) == H(0, 1));
}

TEST_CASE("axis nodes see mirrored neighbours") {
    const Grid g = Grid::axisym(8, 9, 1.4, -1.0, 1.0);
    const ScalarField f = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] + x[1]; });
    const NodeIndex axis{0, 4};
    CHECK(gradient(f, axis)[0] == 0.0);
    CHECK(gradient(f, axis)[1] == doctest::Approx(1.0));
    CHECK(hessian(f, axis)(0, 0) == doctest::Approx(2.0));
    const Patch p = stencil_patch(g, f.mask(), axis, true);
    CHECK(p.at(-1, 0) == p.at(1, 0));
}

TEST_CASE("radial grid second derivative at the origin") {
    const Grid g = Grid::radial(33, 2.0);
    const ScalarField f = ScalarField::from_function(g, [](const Vec2& x) { return 3.0 * x[0] * x[0]; });
    CHECK(hessian(f, {0, 0})(0, 0) == doctest::Approx(6.0));
    CHECK(gradient(f, {0, 0})[0] == 0.0);
}

TEST_CASE("derivatives refuse outside and boundary nodes") {
    const Grid g = Grid::cartesian(5, 5, 0.0, 1.0, 0.0, 1.0);
    std::vector<NodeClass> mask(g.size(), NodeClass::interior);
    mask[g.index(2, 3)] = NodeClass::outside;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            if (i == 0 || j == 0 || i == 4 || j == 4) mask[g.index(i, j)] = NodeClass::boundary;
        }
    }
    const ScalarField f(g, std::vector<double>(g.size(), 1.0), mask);
    CHECK_THROWS_AS(gradient(f, {2, 2}), StencilError);
    CHECK_THROWS_AS(gradient(f, {0, 2}), StencilError);
    try {
        (void)hessian(f, {2, 2});
    } catch (const StencilError& e) {
        CHECK(e.i() == 2);
        CHECK(e.j() == 2);
    }
}

TEST_CASE("CSV round trip is exact") {
    const Grid g = Grid::cartesian(6, 5, -0.3, 0.7, 1.0, 2.0);
    const ScalarField f = ScalarField::from_function(g, [](const Vec2& x) { return std::exp(x[0]) / 3.0 + x[1]; });
    std::stringstream ss;
    write_csv(f, ss);
    const std::string text = ss.str();
    CHECK(text.rfind("axis0,axis1,value,mask\n", 0) == 0);
    const ScalarField back = read_csv(ss, GridKind::cartesian2d);
    CHECK(back.grid() == g);
    CHECK(back.values() == f.values());
    CHECK(back.mask() == f.mask());
}

TEST_CASE("malformed CSV is a configuration error") {
    std::stringstream bad("axis0,axis1,value\n0,0,1\n");
    CHECK_THROWS_AS(read_csv(bad, GridKind::cartesian2d), ConfigError);
    std::stringstream junk("axis0,axis1,value,mask\n0,0,abc,interior\n");
    CHECK_THROWS_AS(read_csv(junk, GridKind::cartesian2d), ConfigError);
}

TEST_CASE("relative boundary of a square block") {
    const Grid g = Grid::cartesian(7, 7, 0.0, 6.0, 0.0, 6.0);
    NodeSet K(g.size(), 0);
    for (int i = 1; i <= 5; ++i) {
        for (int j = 1; j <= 5; ++j) K[g.index(i, j)] = 1;
    }
    const NodeSet dK = relative_boundary(g, K);
    std::size_t count = 0;
    for (char c : dK) count += c;
    CHECK(count == 16);
    CHECK(dK[g.index(3, 3)] == 0);
    CHECK(dK[g.index(1, 3)] == 1);
}

TEST_CASE("the axis is never part of a relative boundary") {
    const Grid g = Grid::axisym(6, 7, 1.0, -1.0, 1.0);
    NodeSet K(g.size(), 0);
    for (int i = 0; i <= 2; ++i) {
        for (int j = 2; j <= 4; ++j) K[g.index(i, j)] = 1;
    }
    const NodeSet dK = relative_boundary(g, K);
    CHECK(dK[g.index(0, 3)] == 0);
    CHECK(dK[g.index(2, 3)] == 1);
    CHECK(dK[g.index(0, 2)] == 1);
}
