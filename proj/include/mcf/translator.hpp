#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mcf/errors.hpp"
#include "mcf/mesh.hpp"
#include "mcf/parallel.hpp"

namespace mcf {

/// Translation velocity: horizontal part (in the base coordinates) and vertical part.
struct Velocity {
    Vec2 horizontal = Vec2::Zero();
    double up = 0.0;
    double norm() const { return std::sqrt(horizontal.squaredNorm() + up * up); }
    static Velocity vertical(double c) { return {Vec2::Zero(), c}; }
};

/// Samples of a rotationally symmetric profile phi(r) and phi'(r) on a uniform radius grid.
struct RadialProfile {
    std::vector<double> r;
    std::vector<double> phi;
    std::vector<double> dphi;
    /// Cubic Hermite interpolation of (phi, phi') at radius `x` (0 <= x <= r.back()).
    std::pair<double, double> eval(double x) const;
};

enum class TranslatorFamily { grim_reaper, bowl, numeric_graph };
std::string to_string(TranslatorFamily f);

struct TranslatorSpec {
    TranslatorFamily family = TranslatorFamily::grim_reaper;
    int m = 1; // surface dimension
    Velocity velocity;
    double speed = 1.0;
    RadialProfile profile; // bowl and radial numeric graphs

    void validate() const;
    /// Graph height and slope at base coordinate x (radius for radial profiles).
    std::pair<double, double> height(double x) const;
    /// Largest admissible base coordinate: pi / (2c) for the grim reaper, the sampled radius otherwise.
    double extent() const;
};

/// Graph of `base` over a line, radial or cartesian grid, with upward normal.
struct GraphSurface {
    ScalarField base;
    int ambient_dimension() const { return base.grid().kind() == GridKind::line ? 2 : 3; }
};

/// Samples a translator on `grid` (line for m = 1, radial or cartesian2d for m = 2) with
/// the default collar mask.
GraphSurface sample_graph(const TranslatorSpec& spec, const Grid& grid);
/// Same, with an explicit mask.
GraphSurface sample_graph(const TranslatorSpec& spec, const Grid& grid, std::vector<NodeClass> mask);

/// r = div(Df/W) - v_up / W + (v_h . Df) / W at interior nodes (0 elsewhere).
ScalarField translator_residual(const GraphSurface& surface, const Velocity& v, Exec exec = Exec::parallel);
/// Mean curvature with respect to the upward normal, div(Df/W), at interior nodes.
ScalarField graph_mean_curvature_up(const GraphSurface& surface, Exec exec = Exec::parallel);

/// mantissa * exp(exponent); exponent is 0 unless the weight exp(v.x) would overflow.
struct ScaledReal {
    double mantissa = 0.0;
    double exponent = 0.0;
    bool scaled() const { return exponent != 0.0; }
    double value() const { return mantissa * std::exp(exponent); }
    double log() const { return std::log(mantissa) + exponent; }
};

/// Midpoint quadrature of the weighted area, sum over interior nodes of exp(v.x) W dA.
/// Switches to the scaled representation when max |v.x| > 600.
ScaledReal weighted_area(const GraphSurface& surface, const Velocity& v);

/// y = -(1/c) ln cos(c x) on |x| < pi / (2c), translating with velocity (0, c).
TranslatorSpec grim_reaper(double c);
/// Rotationally symmetric entire translator, phi''/(1+phi'^2) + phi'/r = c, phi(0) = phi'(0) = 0,
/// integrated with an adaptive Dormand-Prince pair (relative tolerance 1e-13) and sampled at
/// `samples` uniform radii on [0, max_radius].
TranslatorSpec bowl(double c, double max_radius, int samples = 4001);

struct StationarityResult {
    double max_derivative = 0.0;
    double energy = 0.0;   // mantissa units when the energy is scaled
    double relative = 0.0; // max_derivative / |energy|
    std::vector<double> derivatives;
};

/// Centered finite-difference first variation of the weighted area along `trials`
/// deterministic products of quartic bumps supported inside the interior.
StationarityResult stationarity_check(const GraphSurface& surface, const Velocity& v, int trials,
                                      std::uint64_t seed = 20240601, Exec exec = Exec::parallel);

struct HzeroResult {
    int subgrids = 0;
    double worst_gap = 0.0;     // max over subgrids of (boundary min - interior min - eps_grid)
    double epsilon_grid = 0.0;  // largest eps_grid used
    bool pass = false;
};

/// For `count` nested centered squares (intervals, disks for radial grids), the minimum of
/// H . nu over the subgrid must be attained on its relative boundary up to eps_grid.
HzeroResult hzero_check(const GraphSurface& surface, int count, Exec exec = Exec::parallel);

} // namespace mcf
