#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mcf/mesh.hpp"

namespace mcf {

/// Parametric compact region. Two-dimensional kinds live in the (x, y) plane;
/// three-dimensional kinds are rotationally symmetric about the z axis and are
/// described in the (r, z) half-plane.
struct DomainSpec {
    enum class Kind { disk, ellipse, axisym_dumbbell, lens };

    Kind kind = Kind::disk;
    int dimension = 2;

    // disk (ball when dimension == 3): radius, center (center_x must be 0 in 3D)
    double radius = 1.0;
    double center_x = 0.0;
    double center_y = 0.0;
    // ellipse (spheroid in 3D): semi-axis along axis 0 and axis 1
    double semi_axis_0 = 1.0;
    double semi_axis_1 = 1.0;
    // dumbbell: bulbs centered on the axis at z = +-bulb_center
    double bulb_radius = 1.0;
    double bulb_center = 2.0;
    double neck_radius = 0.35;
    double neck_arc_radius = 20.0; // 0: the arc tangent to both bulb circles
    double blend_start = 0.75;     // negative: window centered on the arc/bulb tangency
    double blend_width = 1.15;
    // lens: intersection of two disks of `radius` centered at (0, +-lens_offset)
    double lens_offset = 0.8;

    static DomainSpec disk(double radius, double cx = 0.0, double cy = 0.0);
    static DomainSpec ball(double radius, double cz = 0.0);
    static DomainSpec ellipse(double a, double b, int dimension = 2);
    static DomainSpec dumbbell(double bulb_radius = 1.0, double bulb_center = 2.0, double neck_radius = 0.35);
    /// Neck arc tangent to both bulbs, fillet of width 0.3 centered on the tangency.
    static DomainSpec tangent_dumbbell(double bulb_radius = 1.0, double bulb_center = 2.0, double neck_radius = 0.35);
    static DomainSpec lens(double radius = 1.0, double offset = 0.8);

    /// Throws SpecificationError when the invariants fail.
    void validate() const;
};

std::string to_string(DomainSpec::Kind kind);
DomainSpec::Kind domain_kind_from_string(const std::string& name);

struct Box {
    Vec2 lo;
    Vec2 hi;
};

/// Strict interior test in the coordinate plane.
bool inside(const DomainSpec& spec, const Vec2& p);
/// Bounding box in the coordinate plane (r >= 0 for 3D kinds).
Box bounding_box(const DomainSpec& spec);

struct ConvexityReport {
    bool pass = false;
    double min_mean_curvature = 0.0;
    Vec2 min_location = Vec2::Zero();
    std::vector<double> corner_angles; // radians, lens only
};

/// Samples the boundary uniformly in parameter and evaluates the scalar mean
/// curvature with respect to the inward normal from the parametrization.
ConvexityReport validate_mean_convex(const DomainSpec& spec, int samples);

/// Interior / boundary / outside classification of a grid, zero Dirichlet slots.
/// Boundary nodes are the outside nodes whose 3x3 patch touches the interior.
ScalarField build_mask(const DomainSpec& spec, const Grid& grid);
/// Same classification for an arbitrary strict-interior predicate.
ScalarField build_mask(const Grid& grid, const std::function<bool(const Vec2&)>& is_inside);

/// Closed-form rotationally symmetric dumbbell: a circular neck arc, spherical
/// bulbs, and a quintic Hermite fillet (C2 at both ends) on [z0, z0 + blend].
class DumbbellProfile {
public:
    explicit DumbbellProfile(const DomainSpec& spec);

    /// Profile radius and its first two z-derivatives for |z| below the cap region.
    struct Sample {
        double r;
        double dr;
        double ddr;
    };
    Sample at(double z) const;
    double radius_at(double z) const;
    double neck_arc_radius() const { return rho_; }
    double blend_start() const { return z0_; }
    double blend_end() const { return z0_ + blend_; }
    double tip_z() const { return c_ + a_; }
    /// Scalar mean curvature (inward normal) of the surface of revolution.
    static double mean_curvature(const Sample& s);

private:
    Sample neck(double z) const;
    Sample bulb(double z) const;

    double a_, c_, r0_, blend_, rho_, z0_;
    double coef_[6] = {}; // fillet polynomial in t = (z - z0) / blend
};

} // namespace mcf
