#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mcf/domain.hpp"
#include "mcf/errors.hpp"
#include "mcf/mesh.hpp"
#include "mcf/regularize.hpp"

namespace mcf {

/// Circular arc (radius > 0) or straight segment in the plane, parametrized by arclength.
struct BoundaryPiece {
    Vec2 a = Vec2::Zero(); // segment endpoints
    Vec2 b = Vec2::Zero();
    Vec2 center = Vec2::Zero();
    double radius = 0.0;
    double theta0 = 0.0;
    double sweep = 0.0; // signed; positive is counterclockwise

    static BoundaryPiece segment(const Vec2& a, const Vec2& b);
    static BoundaryPiece arc(const Vec2& center, double radius, double theta0, double sweep);

    bool is_arc() const { return radius > 0.0; }
    double length() const;
    Vec2 point(double s) const;
    Vec2 tangent(double s) const;
    /// Signed curvature, positive when the piece turns left.
    double curvature() const;
    /// Arclength of the closest point to `x`.
    double project(const Vec2& x) const;
};

/// Oriented chain of pieces, parametrized by total arclength.
struct BoundaryChain {
    std::vector<BoundaryPiece> pieces;

    double length() const;
    Vec2 start() const;
    Vec2 end() const;
    Vec2 point(double s) const;
    /// Closest point: (arclength, distance).
    std::pair<double, double> project(const Vec2& x) const;
    /// Polyline with roughly `spacing` between consecutive vertices (endpoints included).
    std::vector<Vec2> sample(double spacing) const;
};

/// Front positions at time t: arclength swept along Sigma' from each endpoint of Gamma.
struct MotionSample {
    double t = 0.0;
    double s_left = 0.0;  // measured from the left point of Gamma (end of Sigma')
    double s_right = 0.0; // measured from the right point of Gamma (start of Sigma')
};

/// Planar region W with boundary Sigma + Sigma' traversed counterclockwise. Sigma runs
/// from the left point of Gamma to the right one; Sigma' returns. The boundary motion
/// is piecewise linear in the samples and frozen after the last one.
struct BoundaryMotionSpec {
    std::string name = "lens";
    DomainSpec region = DomainSpec::lens();
    BoundaryChain sigma;
    BoundaryChain sigma_prime;
    std::vector<MotionSample> motion{MotionSample{}};
    double horizon_coefficient = 1.0; // T(lambda) = coefficient * lambda^exponent
    double horizon_exponent = 2.0;
    double reach_margin = 0.1;        // not reached where u >= (1 - margin) T

    double horizon(double lambda) const;
    /// Position of the fronts at time t (clamped to the sampled range).
    MotionSample fronts(double t) const;
    /// First time the named front reaches arclength d, +infinity if never.
    double passage_time(bool left, double d) const;
    /// Strict interior test of W.
    bool inside(const Vec2& p) const;

    /// Lens of two disks of `radius` centered at (0, +-offset); Sigma is the lower arc.
    static BoundaryMotionSpec lens(double radius = 1.0, double offset = 0.8);
    /// Upper half of the lens: Sigma is the chord y = 0.
    static BoundaryMotionSpec degenerate_lens(double radius = 1.0, double offset = 0.8);
    /// Unit square [0, 1]^2 with Sigma the bottom side.
    static BoundaryMotionSpec square();
};

struct HypothesisResult {
    bool pass = false;
    std::string detail;
};

struct HypothesisReport {
    std::array<HypothesisResult, 6> items; // hypotheses (1) through (6)
    std::array<double, 2> corner_angles{};  // interior angles at the left and right point of Gamma
    bool all_pass() const;
    /// 1-based indices of the failing hypotheses.
    std::vector<int> failures() const;
};

/// Checks hypotheses (1)-(6) on the sampled description. Throws SpecificationError when
/// the spec cannot be read at all (empty chains, non-finite data).
HypothesisReport validate_hypotheses(const BoundaryMotionSpec& spec);

enum class Certificate { point, segment };
std::string to_string(Certificate c);

struct TraceNode {
    NodeIndex node;
    Vec2 foot = Vec2::Zero(); // closest point of the boundary of W
    int arc = 0;              // 0: Sigma, 1: Sigma'
    double arclength = 0.0;   // along the arc's own orientation
    double value = 0.0;
    Certificate certificate = Certificate::point;
};

struct StaircaseData {
    double lambda = 0.0;
    double horizon = 0.0;
    double collar = 0.0;   // rounding width along the boundary, 1 / lambda
    ScalarField dirichlet; // mask layer with the trace in the boundary slots
    std::vector<TraceNode> nodes;
};

/// Trace of the staircase at boundary arclength position: 0 on Sigma, lambda tau on the swept
/// part of Sigma', lambda T on the rest, rounded with a quintic smoothstep over the collar
/// next to every front stop point.
double staircase_value(const BoundaryMotionSpec& spec, double lambda, int arc, double arclength);

/// Mask of W on `grid` and the staircase trace at every boundary node (value at the foot point).
StaircaseData staircase(const BoundaryMotionSpec& spec, const Grid& grid, double lambda);

struct BoundaryFlowResult {
    LadderResult ladder;
    std::vector<StaircaseData> staircases;
    HypothesisReport hypotheses;
    ScalarField u;                // u_lambda at the largest lambda
    double horizon = 0.0;         // T at the largest lambda
    std::vector<char> not_reached; // per node, interior nodes with u >= (1 - margin) T
};

/// Ladder of Dirichlet solves with the staircase data. Requires hypotheses (1), (3) and (4);
/// the remaining ones are reported only.
BoundaryFlowResult solve_boundary_flow(const BoundaryMotionSpec& spec, const Grid& grid,
                                       const std::vector<double>& schedule, const SolverOptions& opts = {});

struct LimitCurve {
    std::vector<Vec2> points;         // longest contour component, ordered
    std::size_t components = 0;
    double level = 0.0;
    double straightness = 0.0;        // max distance to the segment through the end points
    double hausdorff_to_chord = 0.0;  // against the segment joining the limit points of Gamma
    Vec2 chord_left = Vec2::Zero();
    Vec2 chord_right = Vec2::Zero();
};

/// Contour {u = (1 - margin) T} between the reached and not-reached regions (marching
/// squares over cells with no outside corner). Throws DegenerateOutputError when no
/// interior node is reached or no contour exists.
LimitCurve limit_surface(const BoundaryMotionSpec& spec, const ScalarField& u, double horizon);

/// Symmetric Hausdorff distance between two polylines, using point-to-segment distances.
double polyline_hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

} // namespace mcf
