#include "mcf/translator.hpp"

#include <algorithm>
#include <cfloat>
#include <limits>
#include <numbers>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "mcf/regularize.hpp"

namespace mcf {

namespace {
constexpr double pi = std::numbers::pi;
}

std::pair<double, double> RadialProfile::eval(double x) const {
    if (r.size() < 2) throw PreconditionError("radial profile needs at least two samples");
    if (x < 0.0 || x > r.back() * (1.0 + 1e-12)) throw ParameterError("radius outside the sampled profile");
    const double h = r[1] - r[0];
    const std::size_t k = std::min(static_cast<std::size_t>(x / h), r.size() - 2);
    const double t = (x - r[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double value = h00 * phi[k] + h10 * h * dphi[k] + h01 * phi[k + 1] + h11 * h * dphi[k + 1];
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    const double slope = (d00 * phi[k] + d01 * phi[k + 1]) / h + d10 * dphi[k] + d11 * dphi[k + 1];
    return {value, slope};
}

std::string to_string(TranslatorFamily f) {
    switch (f) {
    case TranslatorFamily::grim_reaper: return "grim_reaper";
    case TranslatorFamily::bowl: return "bowl";
    case TranslatorFamily::numeric_graph: return "numeric_graph";
    }
    return "numeric_graph";
}

void TranslatorSpec::validate() const {
    if (!(velocity.norm() > 0.0)) throw ParameterError("translator velocity must be nonzero");
    if (family == TranslatorFamily::grim_reaper && m != 1) throw SpecificationError("grim reaper requires m = 1");
    if (family == TranslatorFamily::bowl && m != 2) throw SpecificationError("bowl requires m = 2");
    if (m != 1 && m != 2) throw SpecificationError("surface dimension must be 1 or 2");
}

std::pair<double, double> TranslatorSpec::height(double x) const {
    if (family == TranslatorFamily::grim_reaper) {
        if (!(std::abs(x) < extent())) throw ParameterError("grim reaper evaluated outside |x| < pi / (2c)");
        return {-std::log(std::cos(speed * x)) / speed, std::tan(speed * x)};
    }
    return profile.eval(x);
}

double TranslatorSpec::extent() const {
    if (family == TranslatorFamily::grim_reaper) return pi / (2.0 * speed);
    return profile.r.empty() ? 0.0 : profile.r.back();
}

TranslatorSpec grim_reaper(double c) {
    if (!(c > 0.0)) throw ParameterError("grim reaper speed must be positive");
    TranslatorSpec s;
    s.family = TranslatorFamily::grim_reaper;
    s.m = 1;
    s.speed = c;
    s.velocity = Velocity::vertical(c);
    return s;
}

TranslatorSpec bowl(double c, double max_radius, int samples) {
    if (!(c > 0.0)) throw ParameterError("bowl speed must be positive");
    if (!(max_radius > 0.0) || samples < 2) throw ParameterError("bowl needs a positive radius and >= 2 samples");
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 2>;
    const auto rhs = [c](const State& y, State& dy, double r) {
        dy[0] = y[1];
        // phi'/r -> phi''(0) on the axis, so phi''(0) = c / 2.
        dy[1] = r > 0.0 ? (1.0 + y[1] * y[1]) * (c - y[1] / r) : 0.5 * c;
    };
    TranslatorSpec s;
    s.family = TranslatorFamily::bowl;
    s.m = 2;
    s.speed = c;
    s.velocity = Velocity::vertical(c);
    std::vector<double> radii(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) radii[static_cast<std::size_t>(k)] = max_radius * k / (samples - 1);
    State y{0.0, 0.0};
    double last_good = 0.0;
    try {
        auto stepper = ode::make_dense_output(1e-15, 1e-13, ode::runge_kutta_dopri5<State>());
        ode::integrate_times(stepper, rhs, y, radii.begin(), radii.end(), max_radius / (samples - 1) * 1e-3,
                             [&](const State& st, double r) {
                                 s.profile.r.push_back(r);
                                 s.profile.phi.push_back(st[0]);
                                 s.profile.dphi.push_back(st[1]);
                                 last_good = r;
                             },
                             ode::max_step_checker(100000));
    } catch (const std::exception& e) {
        throw NumericError("bowl integration failed after r = " + std::to_string(last_good) + ": " + e.what());
    }
    if (s.profile.r.size() != radii.size()) {
        throw NumericError("bowl integration failed after r = " + std::to_string(last_good));
    }
    return s;
}

GraphSurface sample_graph(const TranslatorSpec& spec, const Grid& grid, std::vector<NodeClass> mask) {
    spec.validate();
    const GridKind kind = grid.kind();
    if (spec.m == 1 && kind != GridKind::line) throw SpecificationError("m = 1 translators live on line grids");
    if (spec.m == 2 && kind != GridKind::radial && kind != GridKind::cartesian2d) {
        throw SpecificationError("m = 2 translators live on radial or cartesian2d grids");
    }
    const bool radial_profile = spec.family != TranslatorFamily::grim_reaper;
    return {ScalarField::from_function(grid, std::move(mask), [&](const Vec2& x) {
        const double arg = (radial_profile && kind == GridKind::cartesian2d) ? x.norm() : x[0];
        return spec.height(arg).first;
    })};
}

GraphSurface sample_graph(const TranslatorSpec& spec, const Grid& grid) {
    const ScalarField collar = ScalarField::from_function(grid, [](const Vec2&) { return 0.0; });
    return sample_graph(spec, grid, collar.mask());
}

namespace {

struct LocalGeometry {
    Vec2 grad;
    double W;
    double div; // div(Df / W)
};

LocalGeometry local_geometry(const ScalarField& f, NodeIndex n) {
    const Grid& g = f.grid();
    const Vec2 p = gradient(f, n);
    const Mat2 H = hessian(f, n);
    LocalGeometry out;
    out.grad = p;
    const double W2 = 1.0 + p.squaredNorm();
    out.W = std::sqrt(W2);
    switch (g.kind()) {
    case GridKind::line: out.div = H(0, 0) / (W2 * out.W); break;
    case GridKind::radial: {
        const double r = g.coord(0, n.i);
        const double rot = n.i == 0 ? H(0, 0) : p[0] / r;
        out.div = (H(0, 0) / W2 + rot) / out.W;
        break;
    }
    case GridKind::cartesian2d: {
        const double Q = p.dot(H * p);
        out.div = (H.trace() - Q / W2) / out.W;
        break;
    }
    default: throw SpecificationError("graph surfaces live on line, radial or cartesian2d grids");
    }
    return out;
}

} // namespace

ScalarField graph_mean_curvature_up(const GraphSurface& surface, Exec exec) {
    const ScalarField& f = surface.base;
    const Grid& g = f.grid();
    std::vector<double> out(g.size(), 0.0);
    for_each_index(g.size(), exec, [&](std::size_t k) {
        if (f.mask()[k] == NodeClass::interior) out[k] = local_geometry(f, g.node(k)).div;
    });
    return f.with_values(std::move(out));
}

ScalarField translator_residual(const GraphSurface& surface, const Velocity& v, Exec exec) {
    const ScalarField& f = surface.base;
    const Grid& g = f.grid();
    std::vector<double> out(g.size(), 0.0);
    for_each_index(g.size(), exec, [&](std::size_t k) {
        if (f.mask()[k] != NodeClass::interior) return;
        const LocalGeometry lg = local_geometry(f, g.node(k));
        out[k] = lg.div - v.up / lg.W + v.horizontal.dot(lg.grad) / lg.W;
    });
    return f.with_values(std::move(out));
}

namespace {

double node_measure(const Grid& g, NodeIndex n) {
    if (g.kind() == GridKind::radial) {
        const double dr = g.spacing(0);
        return n.i == 0 ? pi * 0.25 * dr * dr : 2.0 * pi * g.coord(0, n.i) * dr;
    }
    return g.cell_measure();
}

double exponent_at(const Grid& g, NodeIndex n, double f, const Velocity& v) {
    double e = v.up * f;
    if (g.kind() != GridKind::radial) e += v.horizontal.dot(g.position(n));
    return e;
}

// Weighted area with a fixed exponent offset.
double weighted_sum(const ScalarField& f, const Velocity& v, double offset) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (f.mask()[k] != NodeClass::interior) continue;
        const NodeIndex n = g.node(k);
        const Vec2 p = gradient(f, n);
        sum += std::exp(exponent_at(g, n, f.values()[k], v) - offset) * std::sqrt(1.0 + p.squaredNorm()) *
               node_measure(g, n);
    }
    return sum;
}

double exponent_offset(const ScalarField& f, const Velocity& v) {
    const Grid& g = f.grid();
    double top = 0.0;
    bool big = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (f.mask()[k] != NodeClass::interior) continue;
        const double e = exponent_at(g, g.node(k), f.values()[k], v);
        big = big || std::abs(e) > 600.0;
        top = std::max(top, e);
    }
    return big ? top : 0.0;
}

} // namespace

ScaledReal weighted_area(const GraphSurface& surface, const Velocity& v) {
    const double offset = exponent_offset(surface.base, v);
    return {weighted_sum(surface.base, v, offset), offset};
}

StationarityResult stationarity_check(const GraphSurface& surface, const Velocity& v, int trials,
                                      std::uint64_t seed, Exec exec) {
    if (trials < 1) throw ParameterError("stationarity check needs at least one trial");
    const ScalarField& f = surface.base;
    const Grid& g = f.grid();
    const double offset = exponent_offset(f, v);
    StationarityResult out;
    out.energy = weighted_sum(f, v, offset);

    // Box of interior coordinates, shrunk by two nodes.
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    double fmax = 0.0;
    for (const NodeIndex& n : f.interior_nodes()) {
        lo = lo.cwiseMin(g.position(n));
        hi = hi.cwiseMax(g.position(n));
        fmax = std::max(fmax, std::abs(f.value(n)));
    }
    const int dims = g.dimension();
    for (int a = 0; a < dims; ++a) {
        lo[a] += 2.0 * g.spacing(a);
        hi[a] -= 2.0 * g.spacing(a);
    }
    if (g.kind() == GridKind::radial) lo[0] = std::max(lo[0], 2.0 * g.spacing(0));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Bump {
        Vec2 center, width;
    };
    std::vector<Bump> bumps(static_cast<std::size_t>(trials));
    for (Bump& b : bumps) {
        b.center = b.width = Vec2::Zero();
        for (int a = 0; a < dims; ++a) {
            const double len = hi[a] - lo[a];
            b.width[a] = len * (0.1 + 0.2 * unit(rng));
            b.center[a] = lo[a] + b.width[a] + (len - 2.0 * b.width[a]) * unit(rng);
        }
    }
    // Step from the third root of machine precision, scaled to the graph height.
    const double eps = std::cbrt(DBL_EPSILON) * std::max(1.0, fmax);
    out.derivatives.assign(bumps.size(), 0.0);
    for_each_index(bumps.size(), exec, [&](std::size_t t) {
        const Bump& b = bumps[t];
        std::vector<double> plus = f.values(), minus = f.values();
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (f.mask()[k] != NodeClass::interior) continue;
            const Vec2 x = g.position(g.node(k));
            double eta = 1.0;
            for (int a = 0; a < dims; ++a) {
                const double s = (x[a] - b.center[a]) / b.width[a];
                eta *= std::abs(s) < 1.0 ? (1.0 - s * s) * (1.0 - s * s) : 0.0;
            }
            plus[k] += eps * eta;
            minus[k] -= eps * eta;
        }
        const double ep = weighted_sum(f.with_values(std::move(plus)), v, offset);
        const double em = weighted_sum(f.with_values(std::move(minus)), v, offset);
        out.derivatives[t] = (ep - em) / (2.0 * eps);
    });
    for (double d : out.derivatives) out.max_derivative = std::max(out.max_derivative, std::abs(d));
    out.relative = out.max_derivative / std::abs(out.energy);
    return out;
}

HzeroResult hzero_check(const GraphSurface& surface, int count, Exec exec) {
    if (count < 1) throw ParameterError("hzero check needs at least one subgrid");
    const ScalarField q = graph_mean_curvature_up(surface, exec);
    const Grid& g = q.grid();
    const std::vector<NodeIndex> interior = q.interior_nodes();
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const NodeIndex& n : interior) {
        lo = lo.cwiseMin(g.position(n));
        hi = hi.cwiseMax(g.position(n));
    }
    const bool radial = g.kind() == GridKind::radial;
    const Vec2 center = radial ? Vec2::Zero() : Vec2(0.5 * (lo + hi));
    const Vec2 half = radial ? Vec2(hi[0], 0.0) : Vec2(0.5 * (hi - lo));

    HzeroResult out;
    out.subgrids = count;
    out.worst_gap = -std::numeric_limits<double>::infinity();
    for (int s = 1; s <= count; ++s) {
        const double frac = static_cast<double>(s) / count;
        NodeSet K(g.size(), 0);
        for (const NodeIndex& n : interior) {
            const Vec2 d = g.position(n) - center;
            bool in = true;
            for (int a = 0; a < g.dimension(); ++a) in = in && std::abs(d[a]) <= frac * half[a] + 1e-12;
            K[g.index(n)] = in ? 1 : 0;
        }
        const NodeSet dK = relative_boundary(g, K);
        double min_in = std::numeric_limits<double>::infinity();
        double min_bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!K[k]) continue;
            (dK[k] ? min_bd : min_in) = std::min(dK[k] ? min_bd : min_in, q.values()[k]);
        }
        const double eps = epsilon_grid(g, q.values(), K, dK);
        out.epsilon_grid = std::max(out.epsilon_grid, eps);
        if (std::isfinite(min_in)) out.worst_gap = std::max(out.worst_gap, min_bd - min_in - eps);
    }
    out.pass = out.worst_gap <= 0.0;
    return out;
}

} // namespace mcf
