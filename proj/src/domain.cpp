#include "mcf/domain.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>

#include "mcf/errors.hpp"

namespace mcf {

namespace {

constexpr double pi = std::numbers::pi;

} // namespace

std::string to_string(DomainSpec::Kind kind) {
    switch (kind) {
    case DomainSpec::Kind::disk: return "disk";
    case DomainSpec::Kind::ellipse: return "ellipse";
    case DomainSpec::Kind::axisym_dumbbell: return "axisym_dumbbell";
    case DomainSpec::Kind::lens: return "lens";
    }
    return "?";
}

DomainSpec::Kind domain_kind_from_string(const std::string& name) {
    if (name == "disk") return DomainSpec::Kind::disk;
    if (name == "ellipse") return DomainSpec::Kind::ellipse;
    if (name == "axisym_dumbbell" || name == "dumbbell") return DomainSpec::Kind::axisym_dumbbell;
    if (name == "lens") return DomainSpec::Kind::lens;
    throw SpecificationError("unknown domain kind '" + name + "'");
}

DomainSpec DomainSpec::disk(double radius, double cx, double cy) {
    DomainSpec s;
    s.kind = Kind::disk;
    s.dimension = 2;
    s.radius = radius;
    s.center_x = cx;
    s.center_y = cy;
    s.validate();
    return s;
}

DomainSpec DomainSpec::ball(double radius, double cz) {
    DomainSpec s;
    s.kind = Kind::disk;
    s.dimension = 3;
    s.radius = radius;
    s.center_y = cz;
    s.validate();
    return s;
}

DomainSpec DomainSpec::ellipse(double a, double b, int dimension) {
    DomainSpec s;
    s.kind = Kind::ellipse;
    s.dimension = dimension;
    s.semi_axis_0 = a;
    s.semi_axis_1 = b;
    s.validate();
    return s;
}

DomainSpec DomainSpec::dumbbell(double bulb_radius, double bulb_center, double neck_radius) {
    DomainSpec s;
    s.kind = Kind::axisym_dumbbell;
    s.dimension = 3;
    s.bulb_radius = bulb_radius;
    s.bulb_center = bulb_center;
    s.neck_radius = neck_radius;
    s.validate();
    return s;
}

DomainSpec DomainSpec::tangent_dumbbell(double bulb_radius, double bulb_center, double neck_radius) {
    DomainSpec s;
    s.kind = Kind::axisym_dumbbell;
    s.dimension = 3;
    s.bulb_radius = bulb_radius;
    s.bulb_center = bulb_center;
    s.neck_radius = neck_radius;
    s.neck_arc_radius = 0.0;
    s.blend_start = -1.0;
    s.blend_width = 0.3;
    s.validate();
    return s;
}

DomainSpec DomainSpec::lens(double radius, double offset) {
    DomainSpec s;
    s.kind = Kind::lens;
    s.dimension = 2;
    s.radius = radius;
    s.lens_offset = offset;
    s.validate();
    return s;
}

void DomainSpec::validate() const {
    if (dimension != 2 && dimension != 3) throw SpecificationError("ambient dimension must be 2 or 3");
    switch (kind) {
    case Kind::disk:
        if (!(radius > 0.0)) throw SpecificationError("disk radius must be positive");
        if (dimension == 3 && center_x != 0.0) throw SpecificationError("a ball must be centered on the axis");
        break;
    case Kind::ellipse:
        if (!(semi_axis_0 > 0.0) || !(semi_axis_1 > 0.0)) throw SpecificationError("ellipse semi-axes must be positive");
        break;
    case Kind::axisym_dumbbell: {
        if (dimension != 3) throw SpecificationError("dumbbell requires ambient dimension 3");
        if (!(bulb_radius > 0.0) || !(neck_radius > 0.0) || !(blend_width > 0.0)) {
            throw SpecificationError("dumbbell radii and blend width must be positive");
        }
        if (!(neck_radius < bulb_radius)) throw SpecificationError("dumbbell neck radius must be below the bulb radius");
        if (!(bulb_center > bulb_radius)) throw SpecificationError("dumbbell bulbs must not reach the neck plane");
        if (neck_arc_radius < 0.0) throw SpecificationError("dumbbell neck arc radius must be positive (or 0)");
        const DumbbellProfile p(*this);
        const double z_lo = p.blend_start();
        if (z_lo <= 0.0 || z_lo >= p.neck_arc_radius() || p.blend_end() <= bulb_center - bulb_radius ||
            p.blend_end() >= bulb_center) {
            throw SpecificationError("dumbbell blend window does not fit between neck and bulb");
        }
        break;
    }
    case Kind::lens:
        if (dimension != 2) throw SpecificationError("lens requires ambient dimension 2");
        if (!(radius > 0.0) || !(lens_offset > 0.0) || !(lens_offset < radius)) {
            throw SpecificationError("lens needs 0 < offset < radius");
        }
        break;
    }
}

DumbbellProfile::DumbbellProfile(const DomainSpec& spec)
    : a_(spec.bulb_radius), c_(spec.bulb_center), r0_(spec.neck_radius), blend_(spec.blend_width) {
    // Neck circle centered at (z, r) = (0, r0 + rho); the default rho makes it
    // externally tangent to the bulb circle.
    rho_ = spec.neck_arc_radius > 0.0 ? spec.neck_arc_radius
                                      : (c_ * c_ + r0_ * r0_ - a_ * a_) / (2.0 * (a_ - r0_));
    const double zt = c_ * rho_ / (rho_ + a_);
    z0_ = spec.blend_start >= 0.0 ? spec.blend_start : zt - 0.5 * blend_;
    if (z0_ <= 0.0 || z0_ >= rho_ || z0_ + blend_ <= c_ - a_ || z0_ + blend_ >= c_) return; // rejected by validate()

    // Quintic matching value, slope and second derivative of both arcs.
    const Sample lo = neck(z0_);
    const Sample hi = bulb(z0_ + blend_);
    const double w = blend_;
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs;
    for (int e = 0; e < 2; ++e) {
        const double t = e;
        const Sample& s = e == 0 ? lo : hi;
        for (int k = 0; k < 6; ++k) {
            m(3 * e, k) = std::pow(t, k);
            if (k >= 1) m(3 * e + 1, k) = k * std::pow(t, k - 1);
            if (k >= 2) m(3 * e + 2, k) = k * (k - 1) * std::pow(t, k - 2);
        }
        rhs(3 * e) = s.r;
        rhs(3 * e + 1) = s.dr * w;
        rhs(3 * e + 2) = s.ddr * w * w;
    }
    const Eigen::Matrix<double, 6, 1> c = m.partialPivLu().solve(rhs);
    for (int k = 0; k < 6; ++k) coef_[k] = c(k);
}

DumbbellProfile::Sample DumbbellProfile::neck(double z) const {
    const double q = std::sqrt(std::max(rho_ * rho_ - z * z, 0.0));
    return {r0_ + rho_ - q, z / q, rho_ * rho_ / (q * q * q)};
}

DumbbellProfile::Sample DumbbellProfile::bulb(double z) const {
    const double dz = z - c_;
    const double rb = std::sqrt(std::max(a_ * a_ - dz * dz, 0.0));
    return {rb, -dz / rb, -a_ * a_ / (rb * rb * rb)};
}

DumbbellProfile::Sample DumbbellProfile::at(double z) const {
    z = std::abs(z);
    if (z <= z0_) return neck(z);
    if (z >= z0_ + blend_) return bulb(z);
    const double t = (z - z0_) / blend_;
    double r = 0.0, dr = 0.0, ddr = 0.0;
    for (int k = 5; k >= 0; --k) {
        r = r * t + coef_[k];
        if (k >= 1) dr = dr * t + k * coef_[k];
        if (k >= 2) ddr = ddr * t + k * (k - 1) * coef_[k];
    }
    return {r, dr / blend_, ddr / (blend_ * blend_)};
}

double DumbbellProfile::radius_at(double z) const {
    z = std::abs(z);
    if (z >= c_ + a_) return 0.0;
    if (z >= blend_end()) {
        const double dz = z - c_;
        return std::sqrt(std::max(a_ * a_ - dz * dz, 0.0));
    }
    return at(z).r;
}

double DumbbellProfile::mean_curvature(const Sample& s) {
    const double g = std::sqrt(1.0 + s.dr * s.dr);
    return -s.ddr / (g * g * g) + 1.0 / (s.r * g);
}

bool inside(const DomainSpec& spec, const Vec2& p) {
    switch (spec.kind) {
    case DomainSpec::Kind::disk: {
        const double dx = p[0] - spec.center_x;
        const double dy = p[1] - spec.center_y;
        return dx * dx + dy * dy < spec.radius * spec.radius;
    }
    case DomainSpec::Kind::ellipse: {
        const double u = p[0] / spec.semi_axis_0;
        const double v = p[1] / spec.semi_axis_1;
        return u * u + v * v < 1.0;
    }
    case DomainSpec::Kind::axisym_dumbbell: {
        const DumbbellProfile prof(spec);
        const double z = std::abs(p[1]);
        if (z >= prof.tip_z()) return false;
        return std::abs(p[0]) < prof.radius_at(z);
    }
    case DomainSpec::Kind::lens: {
        const double d = spec.lens_offset;
        const double r2 = spec.radius * spec.radius;
        const double up = p[0] * p[0] + (p[1] - d) * (p[1] - d);
        const double dn = p[0] * p[0] + (p[1] + d) * (p[1] + d);
        return up < r2 && dn < r2;
    }
    }
    return false;
}

Box bounding_box(const DomainSpec& spec) {
    const bool three_d = spec.dimension == 3;
    switch (spec.kind) {
    case DomainSpec::Kind::disk:
        if (three_d) return {{0.0, spec.center_y - spec.radius}, {spec.radius, spec.center_y + spec.radius}};
        return {{spec.center_x - spec.radius, spec.center_y - spec.radius},
                {spec.center_x + spec.radius, spec.center_y + spec.radius}};
    case DomainSpec::Kind::ellipse:
        if (three_d) return {{0.0, -spec.semi_axis_1}, {spec.semi_axis_0, spec.semi_axis_1}};
        return {{-spec.semi_axis_0, -spec.semi_axis_1}, {spec.semi_axis_0, spec.semi_axis_1}};
    case DomainSpec::Kind::axisym_dumbbell: {
        const double tip = spec.bulb_center + spec.bulb_radius;
        return {{0.0, -tip}, {spec.bulb_radius, tip}};
    }
    case DomainSpec::Kind::lens: {
        const double xc = std::sqrt(spec.radius * spec.radius - spec.lens_offset * spec.lens_offset);
        const double h = spec.radius - spec.lens_offset;
        return {{-xc, -h}, {xc, h}};
    }
    }
    return {};
}

ConvexityReport validate_mean_convex(const DomainSpec& spec, int samples) {
    spec.validate();
    if (samples < 64) throw ParameterError("validate_mean_convex needs at least 64 samples");
    ConvexityReport rep;
    rep.min_mean_curvature = std::numeric_limits<double>::infinity();
    auto record = [&](double h, Vec2 where) {
        if (h < rep.min_mean_curvature) {
            rep.min_mean_curvature = h;
            rep.min_location = where;
        }
    };
    const bool three_d = spec.dimension == 3;
    switch (spec.kind) {
    case DomainSpec::Kind::disk:
        for (int k = 0; k < samples; ++k) {
            const double t = (three_d ? pi : 2.0 * pi) * k / samples - (three_d ? 0.5 * pi : 0.0);
            const Vec2 p = three_d ? Vec2(spec.radius * std::cos(t), spec.center_y + spec.radius * std::sin(t))
                                   : Vec2(spec.center_x + spec.radius * std::cos(t),
                                          spec.center_y + spec.radius * std::sin(t));
            record((spec.dimension - 1) / spec.radius, p);
        }
        break;
    case DomainSpec::Kind::ellipse: {
        const double a = spec.semi_axis_0;
        const double b = spec.semi_axis_1;
        for (int k = 0; k < samples; ++k) {
            // Meridian parameter: full turn in 2D, [-pi/2, pi/2] in 3D.
            const double t = three_d ? -0.5 * pi + pi * (k + 0.5) / samples : 2.0 * pi * k / samples;
            const double s = std::sin(t);
            const double c = std::cos(t);
            const double q = a * a * s * s + b * b * c * c;
            double h = a * b / std::pow(q, 1.5);
            if (three_d) h += b / (a * std::sqrt(q));
            record(h, Vec2(a * c, b * s));
        }
        break;
    }
    case DomainSpec::Kind::axisym_dumbbell: {
        const DumbbellProfile prof(spec);
        const int half = samples / 2;
        const double z_end = prof.blend_end();
        // Neck and blend, graph over z (symmetric in z).
        for (int k = 0; k < half; ++k) {
            const double z = z_end * k / half;
            const auto s = prof.at(z);
            record(DumbbellProfile::mean_curvature(s), Vec2(s.r, z));
            record(DumbbellProfile::mean_curvature(s), Vec2(s.r, -z));
        }
        // Spherical caps beyond the blend, by polar angle from the bulb center.
        const double phi0 = std::acos(std::clamp((z_end - spec.bulb_center) / spec.bulb_radius, -1.0, 1.0));
        for (int k = 0; k <= samples - half; ++k) {
            const double phi = phi0 * (1.0 - static_cast<double>(k) / (samples - half));
            const Vec2 p(spec.bulb_radius * std::sin(phi), spec.bulb_center + spec.bulb_radius * std::cos(phi));
            record(2.0 / spec.bulb_radius, p);
        }
        break;
    }
    case DomainSpec::Kind::lens: {
        const double R = spec.radius;
        const double d = spec.lens_offset;
        const double xc = std::sqrt(R * R - d * d);
        // Each arc is a circle of radius R, curvature 1/R toward the lens interior.
        for (int k = 0; k < samples; ++k) {
            const double x = -xc + 2.0 * xc * (k + 0.5) / samples;
            const double y = std::sqrt(R * R - x * x);
            record(1.0 / R, Vec2(x, d - y));
            record(1.0 / R, Vec2(x, -d + y));
        }
        // Interior corner angle: pi minus the angle between the two radii at the corner.
        const double cos_beta = (xc * xc - d * d) / (R * R);
        const double angle = pi - std::acos(std::clamp(cos_beta, -1.0, 1.0));
        rep.corner_angles = {angle, angle};
        break;
    }
    }
    rep.pass = rep.min_mean_curvature > 0.0;
    for (double a : rep.corner_angles) rep.pass = rep.pass && a <= pi;
    return rep;
}

ScalarField build_mask(const DomainSpec& spec, const Grid& grid) {
    spec.validate();
    const bool axis_grid = grid.kind() == GridKind::axisym_rz;
    if ((spec.dimension == 3) != axis_grid || (spec.dimension == 2 && grid.kind() != GridKind::cartesian2d)) {
        throw SpecificationError("domain dimension " + std::to_string(spec.dimension) +
                                 " does not match grid kind " + to_string(grid.kind()));
    }
    return build_mask(grid, [&spec](const Vec2& p) { return inside(spec, p); });
}

ScalarField build_mask(const Grid& grid, const std::function<bool(const Vec2&)>& is_inside) {
    const std::size_t n = grid.size();
    std::vector<char> in(n, 0);
    for (std::size_t k = 0; k < n; ++k) in[k] = is_inside(grid.position(grid.node(k))) ? 1 : 0;

    std::vector<NodeClass> mask(n, NodeClass::outside);
    std::size_t n_interior = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (in[k]) {
            mask[k] = NodeClass::interior;
            ++n_interior;
            continue;
        }
        const NodeIndex nd = grid.node(k);
        for (int a = -1; a <= 1 && mask[k] == NodeClass::outside; ++a) {
            for (int b = -1; b <= 1; ++b) {
                int i = nd.i + a;
                const int j = nd.j + b;
                if (i < 0 && grid.has_axis()) i = -i;
                if (grid.contains(i, j) && in[grid.index(i, j)]) {
                    mask[k] = NodeClass::boundary;
                    break;
                }
            }
        }
    }
    if (n_interior == 0) throw ResolutionError("grid has no node inside the domain");

    // Coverage: the interior must keep a one-node collar away from the grid edges.
    for (std::size_t k = 0; k < n; ++k) {
        if (mask[k] != NodeClass::interior) continue;
        const NodeIndex nd = grid.node(k);
        const bool low0 = nd.i == 0 && !grid.has_axis();
        if (low0 || nd.i == grid.n0() - 1 || nd.j == 0 || nd.j == grid.n1() - 1) {
            throw ResolutionError("grid does not cover the domain with a one-node margin");
        }
    }

    // Thickness: every connected interior component spans at least 3 nodes along each axis.
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (mask[seed] != NodeClass::interior || comp[seed] >= 0) continue;
        std::queue<std::size_t> q;
        q.push(seed);
        comp[seed] = ncomp;
        int lo0 = grid.n0(), hi0 = -1, lo1 = grid.n1(), hi1 = -1;
        while (!q.empty()) {
            const std::size_t k = q.front();
            q.pop();
            const NodeIndex nd = grid.node(k);
            lo0 = std::min(lo0, nd.i);
            hi0 = std::max(hi0, nd.i);
            lo1 = std::min(lo1, nd.j);
            hi1 = std::max(hi1, nd.j);
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            for (int t = 0; t < 4; ++t) {
                const int i = nd.i + di[t];
                const int j = nd.j + dj[t];
                if (!grid.contains(i, j)) continue;
                const std::size_t m = grid.index(i, j);
                if (mask[m] == NodeClass::interior && comp[m] < 0) {
                    comp[m] = ncomp;
                    q.push(m);
                }
            }
        }
        int span0 = hi0 - lo0 + 1;
        if (grid.has_axis() && lo0 == 0) span0 = 2 * span0 - 1;
        if (span0 < 3 || hi1 - lo1 + 1 < 3) {
            throw ResolutionError("grid too coarse: an interior region is thinner than 3 nodes");
        }
        ++ncomp;
    }
    return ScalarField(grid, std::vector<double>(n, 0.0), std::move(mask));
}

} // namespace mcf
