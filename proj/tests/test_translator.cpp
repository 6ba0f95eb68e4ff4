#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mcf/errors.hpp"
#include "mcf/domain.hpp"
#include "mcf/translator.hpp"

using namespace mcf;

namespace {

double sup_interior(const ScalarField& r) {
    double worst = 0.0;
    for (std::size_t k = 0; k < r.values().size(); ++k) {
        if (r.mask()[k] == NodeClass::interior) worst = std::max(worst, std::abs(r.values()[k]));
    }
    return worst;
}

GraphSurface flat_disk(int n, double height) {
    const Grid g = Grid::cartesian(n, n, -1.1, 1.1, -1.1, 1.1);
    return {build_mask(DomainSpec::disk(1.0), g).with_values(std::vector<double>(g.size(), height))};
}

} // namespace

TEST_CASE("grim reaper closed form") {
    const TranslatorSpec s = grim_reaper(1.0);
    CHECK(s.height(std::numbers::pi / 4).first == doctest::Approx(std::log(std::sqrt(2.0))).epsilon(1e-12));
    CHECK(s.height(0.0).first == 0.0);
    CHECK(s.height(0.0).second == 0.0);
    const TranslatorSpec s2 = grim_reaper(2.0);
    for (double x : {0.1, 0.3, 0.7}) CHECK(s2.height(x).first == doctest::Approx(0.5 * s.height(2.0 * x).first));
    CHECK_THROWS_AS(grim_reaper(0.0), ParameterError);
}

TEST_CASE("grim reaper residual and refinement order") {
    const TranslatorSpec s = grim_reaper(1.0);
    const Velocity v = Velocity::vertical(1.0);
    const double r1 = sup_interior(translator_residual(sample_graph(s, Grid::line(1024, -1.2, 1.2)), v));
    const double r2 = sup_interior(translator_residual(sample_graph(s, Grid::line(2048, -1.2, 1.2)), v));
    CHECK(r1 <= 5e-4);
    CHECK(std::log(r1 / r2) / std::log(2047.0 / 1023.0) >= 1.8);
}

TEST_CASE("flat graphs: vertical velocity gives -1, horizontal gives 0") {
    const GraphSurface flat = flat_disk(65, 0.0);
    const ScalarField up = translator_residual(flat, Velocity::vertical(1.0));
    const ScalarField side = translator_residual(flat, Velocity{Vec2(1.0, 0.0), 0.0});
    for (std::size_t k = 0; k < up.values().size(); ++k) {
        if (up.mask()[k] != NodeClass::interior) continue;
        CHECK(up.values()[k] == doctest::Approx(-1.0));
        CHECK(side.values()[k] == 0.0);
    }
}

TEST_CASE("tilted plane translating along itself has zero residual") {
    // f = a x, v = (1, a): the plane contains v. This fixes the sign of the horizontal term.
    const double a = 0.7;
    const Grid g = Grid::cartesian(33, 33, -1.0, 1.0, -1.0, 1.0);
    const GraphSurface tilted{ScalarField::from_function(g, [&](const Vec2& x) { return a * x[0]; })};
    CHECK(sup_interior(translator_residual(tilted, Velocity{Vec2(1.0, 0.0), a})) < 1e-12);
    CHECK(sup_interior(translator_residual(tilted, Velocity{Vec2(-1.0, 0.0), a})) > 0.5);
}

TEST_CASE("weighted area of flat disks") {
    const ScaledReal a0 = weighted_area(flat_disk(256, 0.0), Velocity::vertical(1.0));
    CHECK(a0.value() == doctest::Approx(std::numbers::pi).epsilon(0.01));
    const ScaledReal a1 = weighted_area(flat_disk(256, 1.0), Velocity::vertical(1.0));
    CHECK(a1.value() == doctest::Approx(std::exp(1.0) * std::numbers::pi).epsilon(0.01));
}

TEST_CASE("weighted area of the grim reaper matches 1D quadrature") {
    // Interior nodes at the midpoints of 4096 cells covering [-1, 1]; the collar nodes fall outside.
    const int cells = 4096;
    const double dx = 2.0 / cells;
    const Grid g = Grid::line(cells + 2, -1.0 - 0.5 * dx, 1.0 + 0.5 * dx);
    const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double x) {
            const double f = -std::log(std::cos(x));
            return std::exp(f) * std::sqrt(1.0 + std::tan(x) * std::tan(x));
        },
        -1.0, 1.0, 15, 1e-14);
    const double quad = weighted_area(sample_graph(grim_reaper(1.0), g), Velocity::vertical(1.0)).value();
    CHECK(quad == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("weighted area is invariant under horizontal shifts") {
    const Grid a = Grid::cartesian(128, 128, -1.1, 1.1, -1.1, 1.1);
    const Grid b = Grid::cartesian(128, 128, 1.9, 4.1, -1.1, 1.1);
    const auto bump = [](const Vec2& c) {
        return [c](const Vec2& x) { return 0.3 * std::exp(-(x - c).squaredNorm()); };
    };
    const GraphSurface sa{ScalarField::from_function(a, bump(Vec2(0.0, 0.0)))};
    const GraphSurface sb{ScalarField::from_function(b, bump(Vec2(3.0, 0.0)))};
    const Velocity v = Velocity::vertical(1.0);
    CHECK(weighted_area(sa, v).value() == doctest::Approx(weighted_area(sb, v).value()).epsilon(1e-12));
}

TEST_CASE("weighted area switches to the scaled representation") {
    const GraphSurface high = flat_disk(65, 700.0);
    const ScaledReal a = weighted_area(high, Velocity::vertical(1.0));
    CHECK(a.scaled());
    CHECK(a.log() == doctest::Approx(700.0 + std::log(a.mantissa)).epsilon(1e-12));
    CHECK(std::isfinite(a.mantissa));
}

TEST_CASE("bowl profile") {
    const TranslatorSpec b = bowl(1.0, 10.0, 4001);
    CHECK(b.height(0.0).first == 0.0);
    CHECK(b.height(0.0).second == 0.0);
    double prev = 0.0;
    for (double r = 0.25; r <= 10.0; r += 0.25) {
        const auto [phi, dphi] = b.height(r);
        CHECK(dphi > prev);
        prev = dphi;
        if (r >= 5.0) CHECK(std::abs(phi - (r * r / 2.0 - std::log(r))) <= 1.0);
    }
    CHECK_THROWS_AS(bowl(-1.0, 4.0), ParameterError);
}

TEST_CASE("bowl residual on r <= 4") {
    const TranslatorSpec b = bowl(1.0, 4.0);
    const Velocity v = Velocity::vertical(1.0);
    const double r1 = sup_interior(translator_residual(sample_graph(b, Grid::radial(1024, 4.0)), v));
    const double r2 = sup_interior(translator_residual(sample_graph(b, Grid::radial(2048, 4.0)), v));
    CHECK(r2 <= 1e-5);
    CHECK(std::log(r1 / r2) / std::log(2047.0 / 1023.0) >= 1.8);
}

TEST_CASE("stationarity: translators are stationary, the flat disk is not") {
    const Velocity v = Velocity::vertical(1.0);
    const StationarityResult reaper = stationarity_check(sample_graph(grim_reaper(1.0), Grid::line(1024, -1.2, 1.2)), v, 8);
    const StationarityResult fine = stationarity_check(sample_graph(grim_reaper(1.0), Grid::line(2048, -1.2, 1.2)), v, 8);
    CHECK(reaper.relative <= 1e-5);
    CHECK(fine.relative < 0.5 * reaper.relative);
    const StationarityResult b = stationarity_check(sample_graph(bowl(1.0, 4.0), Grid::radial(2048, 4.0)), v, 8);
    CHECK(b.relative <= 1e-5);
    const StationarityResult flat = stationarity_check(flat_disk(129, 0.0), v, 8);
    CHECK(flat.relative > 1e-2);
}

TEST_CASE("H.nu has no interior minimum for the grim reaper and the bowl") {
    CHECK(hzero_check(sample_graph(grim_reaper(1.0), Grid::line(1024, -1.2, 1.2)), 5).pass);
    CHECK(hzero_check(sample_graph(bowl(1.0, 4.0), Grid::radial(1024, 4.0)), 5).pass);
}

TEST_CASE("specification invariants") {
    TranslatorSpec s = grim_reaper(1.0);
    s.m = 2;
    CHECK_THROWS_AS(s.validate(), SpecificationError);
    TranslatorSpec b = bowl(1.0, 2.0, 101);
    b.velocity = Velocity{};
    CHECK_THROWS(b.validate());
    CHECK_THROWS_AS(sample_graph(grim_reaper(1.0), Grid::radial(64, 1.0)), SpecificationError);
}

TEST_CASE("serial and parallel residuals agree bit for bit") {
    const GraphSurface s = sample_graph(bowl(1.0, 3.0), Grid::cartesian(97, 97, -2.0, 2.0, -2.0, 2.0));
    const Velocity v = Velocity::vertical(1.0);
    CHECK(translator_residual(s, v, Exec::serial).values() == translator_residual(s, v, Exec::parallel).values());
    CHECK(stationarity_check(s, v, 4, 7, Exec::serial).derivatives ==
          stationarity_check(s, v, 4, 7, Exec::parallel).derivatives);
}
