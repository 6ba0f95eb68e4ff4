#include "mcf/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace mcf {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

double cross(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * d)).norm();
}

double smoothstep5(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// Closed polygon of the boundary of W (Sigma then Sigma'), for inside tests.
class Outline {
public:
    Outline(const BoundaryMotionSpec& spec, double spacing) {
        const std::vector<Vec2> a = spec.sigma.sample(spacing);
        const std::vector<Vec2> b = spec.sigma_prime.sample(spacing);
        v_.assign(a.begin(), a.end());
        v_.insert(v_.end(), b.begin() + 1, b.end());
        if (v_.size() > 1 && (v_.front() - v_.back()).norm() < 1e-12) v_.pop_back();
        lo_ = hi_ = v_.front();
        for (const Vec2& p : v_) {
            lo_ = lo_.cwiseMin(p);
            hi_ = hi_.cwiseMax(p);
        }
        const double scale = (hi_ - lo_).norm();
        tol_ = 1e-12 * std::max(1.0, scale);
    }

    bool inside(const Vec2& p) const {
        if ((p.array() <= lo_.array()).any() || (p.array() >= hi_.array()).any()) return false;
        bool in = false;
        const std::size_t n = v_.size();
        for (std::size_t k = 0, m = n - 1; k < n; m = k++) {
            const Vec2& a = v_[k];
            const Vec2& b = v_[m];
            if (segment_distance(p, a, b) <= tol_) return false;
            if ((a[1] > p[1]) != (b[1] > p[1])) {
                const double x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if (p[0] < x) in = !in;
            }
        }
        return in;
    }

    const std::vector<Vec2>& vertices() const { return v_; }

private:
    std::vector<Vec2> v_;
    Vec2 lo_, hi_;
    double tol_ = 0.0;
};

double outline_spacing(const BoundaryMotionSpec& spec) {
    return 1e-3 * std::max(spec.sigma.length(), spec.sigma_prime.length());
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

double turning_angle(const Vec2& t_in, const Vec2& t_out) { return std::atan2(cross(t_in, t_out), t_in.dot(t_out)); }

bool finite(const Vec2& v) { return std::isfinite(v[0]) && std::isfinite(v[1]); }

void check_readable(const BoundaryMotionSpec& spec) {
    if (spec.sigma.pieces.empty() || spec.sigma_prime.pieces.empty()) {
        throw SpecificationError("boundary spec needs non-empty Sigma and Sigma' chains");
    }
    for (const BoundaryChain* c : {&spec.sigma, &spec.sigma_prime}) {
        for (const BoundaryPiece& p : c->pieces) {
            const bool ok = p.is_arc() ? finite(p.center) && std::isfinite(p.theta0) && std::isfinite(p.sweep)
                                       : finite(p.a) && finite(p.b);
            if (!ok || !std::isfinite(p.radius) || p.radius < 0.0) {
                throw SpecificationError("boundary piece with non-finite or negative parameters");
            }
        }
    }
    if (spec.motion.empty()) throw SpecificationError("boundary motion needs at least one sample");
    if (!(spec.horizon_coefficient > 0.0) || !std::isfinite(spec.horizon_exponent)) {
        throw SpecificationError("horizon rule needs a positive coefficient and a finite exponent");
    }
    if (!(spec.reach_margin > 0.0 && spec.reach_margin < 1.0)) {
        throw SpecificationError("reach margin must lie in (0, 1)");
    }
}

} // namespace

// ---- pieces and chains --------------------------------------------------------

BoundaryPiece BoundaryPiece::segment(const Vec2& a, const Vec2& b) {
    BoundaryPiece p;
    p.a = a;
    p.b = b;
    return p;
}

BoundaryPiece BoundaryPiece::arc(const Vec2& center, double radius, double theta0, double sweep) {
    BoundaryPiece p;
    p.center = center;
    p.radius = radius;
    p.theta0 = theta0;
    p.sweep = sweep;
    p.a = p.point(0.0);
    p.b = p.point(p.length());
    return p;
}

double BoundaryPiece::length() const { return is_arc() ? radius * std::abs(sweep) : (b - a).norm(); }

Vec2 BoundaryPiece::point(double s) const {
    if (!is_arc()) {
        const double L = length();
        return L > 0.0 ? Vec2(a + (s / L) * (b - a)) : a;
    }
    const double th = theta0 + std::copysign(s / radius, sweep);
    return center + radius * Vec2(std::cos(th), std::sin(th));
}

Vec2 BoundaryPiece::tangent(double s) const {
    if (!is_arc()) return (b - a).normalized();
    const double th = theta0 + std::copysign(s / radius, sweep);
    return std::copysign(1.0, sweep) * Vec2(-std::sin(th), std::cos(th));
}

double BoundaryPiece::curvature() const { return is_arc() ? std::copysign(1.0 / radius, sweep) : 0.0; }

double BoundaryPiece::project(const Vec2& x) const {
    const double L = length();
    if (!is_arc()) {
        const Vec2 d = b - a;
        const double len2 = d.squaredNorm();
        return len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) * L : 0.0;
    }
    const Vec2 r = x - center;
    if (r.squaredNorm() == 0.0) return 0.0;
    const double sgn = std::copysign(1.0, sweep);
    double t = sgn * (std::atan2(r[1], r[0]) - theta0);
    t = std::fmod(t, 2.0 * pi);
    if (t < 0.0) t += 2.0 * pi;
    if (t <= std::abs(sweep)) return radius * t;
    return (x - point(0.0)).norm() <= (x - point(L)).norm() ? 0.0 : L;
}

double BoundaryChain::length() const {
    double L = 0.0;
    for (const BoundaryPiece& p : pieces) L += p.length();
    return L;
}

Vec2 BoundaryChain::start() const { return pieces.front().point(0.0); }
Vec2 BoundaryChain::end() const { return pieces.back().point(pieces.back().length()); }

Vec2 BoundaryChain::point(double s) const {
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const double L = pieces[k].length();
        if (s <= L || k + 1 == pieces.size()) return pieces[k].point(std::clamp(s, 0.0, L));
        s -= L;
    }
    return start();
}

std::pair<double, double> BoundaryChain::project(const Vec2& x) const {
    double best = inf, at = 0.0, offset = 0.0;
    for (const BoundaryPiece& p : pieces) {
        const double s = p.project(x);
        const double d = (x - p.point(s)).norm();
        if (d < best) {
            best = d;
            at = offset + s;
        }
        offset += p.length();
    }
    return {at, best};
}

std::vector<Vec2> BoundaryChain::sample(double spacing) const {
    std::vector<Vec2> out{start()};
    for (const BoundaryPiece& p : pieces) {
        const double L = p.length();
        const int n = std::max(1, static_cast<int>(std::ceil(L / spacing)));
        for (int k = 1; k <= n; ++k) out.push_back(p.point(L * k / n));
    }
    return out;
}

// ---- motion spec ----------------------------------------------------------------

double BoundaryMotionSpec::horizon(double lambda) const {
    return horizon_coefficient * std::pow(lambda, horizon_exponent);
}

MotionSample BoundaryMotionSpec::fronts(double t) const {
    if (t <= motion.front().t) return {t, motion.front().s_left, motion.front().s_right};
    for (std::size_t k = 1; k < motion.size(); ++k) {
        if (t <= motion[k].t) {
            const MotionSample& p = motion[k - 1];
            const MotionSample& q = motion[k];
            const double w = (t - p.t) / (q.t - p.t);
            return {t, p.s_left + w * (q.s_left - p.s_left), p.s_right + w * (q.s_right - p.s_right)};
        }
    }
    return {t, motion.back().s_left, motion.back().s_right};
}

double BoundaryMotionSpec::passage_time(bool left, double d) const {
    const auto s = [&](std::size_t k) { return left ? motion[k].s_left : motion[k].s_right; };
    if (d <= s(0)) return motion.front().t;
    for (std::size_t k = 1; k < motion.size(); ++k) {
        if (s(k) >= d) {
            const double w = (d - s(k - 1)) / (s(k) - s(k - 1));
            return motion[k - 1].t + w * (motion[k].t - motion[k - 1].t);
        }
    }
    return inf;
}

bool BoundaryMotionSpec::inside(const Vec2& p) const { return Outline(*this, outline_spacing(*this)).inside(p); }

BoundaryMotionSpec BoundaryMotionSpec::lens(double radius, double offset) {
    BoundaryMotionSpec s;
    s.name = "lens";
    s.region = DomainSpec::lens(radius, offset);
    const double alpha = std::asin(std::sqrt(radius * radius - offset * offset) / radius);
    s.sigma.pieces = {BoundaryPiece::arc(Vec2(0.0, offset), radius, -pi / 2 - alpha, 2.0 * alpha)};
    s.sigma_prime.pieces = {BoundaryPiece::arc(Vec2(0.0, -offset), radius, pi / 2 - alpha, 2.0 * alpha)};
    return s;
}

BoundaryMotionSpec BoundaryMotionSpec::degenerate_lens(double radius, double offset) {
    BoundaryMotionSpec s = lens(radius, offset);
    s.name = "degenerate_lens";
    const double xc = std::sqrt(radius * radius - offset * offset);
    s.sigma.pieces = {BoundaryPiece::segment(Vec2(-xc, 0.0), Vec2(xc, 0.0))};
    return s;
}

BoundaryMotionSpec BoundaryMotionSpec::square() {
    BoundaryMotionSpec s;
    s.name = "square";
    s.sigma.pieces = {BoundaryPiece::segment(Vec2(0, 0), Vec2(1, 0))};
    s.sigma_prime.pieces = {BoundaryPiece::segment(Vec2(1, 0), Vec2(1, 1)), BoundaryPiece::segment(Vec2(1, 1), Vec2(0, 1)),
                            BoundaryPiece::segment(Vec2(0, 1), Vec2(0, 0))};
    return s;
}

// ---- hypotheses -----------------------------------------------------------------

bool HypothesisReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const HypothesisResult& r) { return r.pass; });
}

std::vector<int> HypothesisReport::failures() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (!items[k].pass) out.push_back(static_cast<int>(k) + 1);
    }
    return out;
}

HypothesisReport validate_hypotheses(const BoundaryMotionSpec& spec) {
    check_readable(spec);
    HypothesisReport rep;
    const double scale = std::max(spec.sigma.length(), spec.sigma_prime.length());
    const double gap_tol = 1e-9 * std::max(1.0, scale);
    const double angle_tol = 1e-6;

    // (1) piecewise smooth, corners exactly at Gamma, simple closed curve around W.
    {
        std::ostringstream why;
        for (const auto& [label, chain] : {std::pair<const char*, const BoundaryChain*>{"Sigma", &spec.sigma},
                                           std::pair<const char*, const BoundaryChain*>{"Sigma'", &spec.sigma_prime}}) {
            const auto& ps = chain->pieces;
            for (std::size_t k = 0; k < ps.size(); ++k) {
                if (!(ps[k].length() > gap_tol)) why << label << " has a piece of zero length; ";
                if (k == 0) continue;
                const double L = ps[k - 1].length();
                if ((ps[k - 1].point(L) - ps[k].point(0.0)).norm() > gap_tol) why << label << " has a gap; ";
                else if (std::abs(turning_angle(ps[k - 1].tangent(L), ps[k].tangent(0.0))) > angle_tol) {
                    why << label << " has a corner away from Gamma; ";
                }
            }
        }
        if ((spec.sigma.end() - spec.sigma_prime.start()).norm() > gap_tol ||
            (spec.sigma_prime.end() - spec.sigma.start()).norm() > gap_tol) {
            why << "Sigma and Sigma' do not share the endpoints Gamma; ";
        }
        if ((spec.sigma.start() - spec.sigma.end()).norm() <= gap_tol) why << "Gamma points coincide; ";
        if (why.str().empty()) {
            const std::vector<Vec2> v = Outline(spec, scale / 256.0).vertices();
            double area = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) area += cross(v[k], v[(k + 1) % v.size()]);
            if (!(area > 0.0)) why << "boundary is not counterclockwise around W; ";
            bool crossing = false;
            const std::size_t n = v.size();
            for (std::size_t a = 0; a < n && !crossing; ++a) {
                for (std::size_t b = a + 2; b < n && !crossing; ++b) {
                    if (a == 0 && b == n - 1) continue;
                    crossing = segments_cross(v[a], v[(a + 1) % n], v[b], v[(b + 1) % n]);
                }
            }
            if (crossing) why << "boundary self-intersects; ";
        }
        rep.items[0] = {why.str().empty(), why.str().empty() ? "two smooth arcs meeting at Gamma" : why.str()};
    }

    // Corner angles at Gamma: pi minus the turning angle of the counterclockwise tangent.
    {
        const BoundaryPiece& s_last = spec.sigma.pieces.back();
        const BoundaryPiece& p_last = spec.sigma_prime.pieces.back();
        const Vec2 t_sigma_end = s_last.tangent(s_last.length());
        const Vec2 t_prime_end = p_last.tangent(p_last.length());
        rep.corner_angles[0] = pi - turning_angle(t_prime_end, spec.sigma.pieces.front().tangent(0.0));
        rep.corner_angles[1] = pi - turning_angle(t_sigma_end, spec.sigma_prime.pieces.front().tangent(0.0));
    }

    // (2) strict mean convexity of every piece, corner angles at most pi.
    {
        std::ostringstream why;
        double kmin = inf;
        for (const BoundaryChain* c : {&spec.sigma, &spec.sigma_prime}) {
            for (const BoundaryPiece& p : c->pieces) kmin = std::min(kmin, p.curvature());
        }
        if (!(kmin > 0.0)) why << "minimum boundary curvature " << kmin << " is not positive; ";
        for (double a : rep.corner_angles) {
            if (a > pi + angle_tol) why << "corner angle " << a << " exceeds pi; ";
        }
        std::ostringstream ok;
        ok << "minimum curvature " << kmin << ", corner angles " << rep.corner_angles[0] << ", " << rep.corner_angles[1];
        rep.items[1] = {why.str().empty(), why.str().empty() ? ok.str() : why.str()};
    }

    // (3) sampled motion starting at Gamma.
    {
        std::ostringstream why;
        for (std::size_t k = 0; k < spec.motion.size(); ++k) {
            const MotionSample& m = spec.motion[k];
            if (!std::isfinite(m.t) || !std::isfinite(m.s_left) || !std::isfinite(m.s_right)) {
                why << "sample " << k << " is not finite; ";
            } else if (m.s_left < 0.0 || m.s_right < 0.0) {
                why << "sample " << k << " has a negative parameter; ";
            }
            if (k > 0 && !(m.t > spec.motion[k - 1].t)) why << "sample times are not strictly increasing at " << k << "; ";
        }
        const MotionSample& m0 = spec.motion.front();
        if (m0.t != 0.0 || m0.s_left != 0.0 || m0.s_right != 0.0) why << "first sample is not (0, 0, 0); ";
        rep.items[2] = {why.str().empty(), why.str().empty() ? "Gamma_0 = Gamma" : why.str()};
    }

    // (4) monotone fronts that never cross.
    {
        std::ostringstream why;
        const double Lp = spec.sigma_prime.length();
        for (std::size_t k = 0; k < spec.motion.size(); ++k) {
            const MotionSample& m = spec.motion[k];
            if (k > 0 && (m.s_left < spec.motion[k - 1].s_left || m.s_right < spec.motion[k - 1].s_right)) {
                why << "parameter decreases at sample " << k << "; ";
            }
            if (m.s_left + m.s_right > Lp + gap_tol) why << "fronts cross at sample " << k << "; ";
        }
        rep.items[3] = {why.str().empty(), why.str().empty() ? "nondecreasing parameters" : why.str()};
    }

    // (5) a straight Sigma has to start moving at once.
    {
        bool straight = true;
        const Vec2 dir = (spec.sigma.end() - spec.sigma.start()).normalized();
        for (const BoundaryPiece& p : spec.sigma.pieces) {
            straight = straight && !p.is_arc() && std::abs(cross(dir, (p.b - p.a).normalized())) <= angle_tol;
        }
        if (!straight) {
            rep.items[4] = {true, "vacuous: Sigma is not minimal"};
        } else {
            const bool moves = spec.motion.size() > 1 && (spec.motion[1].s_left > 0.0 || spec.motion[1].s_right > 0.0);
            rep.items[4] = {moves, moves ? "Sigma minimal, boundary moves at once"
                                         : "Sigma is minimal but the boundary does not move near t = 0"};
        }
    }

    // (6) convergence: the sampled derivative vanishes at the end of the record.
    {
        const std::size_t n = spec.motion.size();
        bool settled = true;
        if (n > 1) {
            settled = spec.motion[n - 1].s_left == spec.motion[n - 2].s_left &&
                      spec.motion[n - 1].s_right == spec.motion[n - 2].s_right;
        }
        rep.items[5] = {settled, settled ? "fronts settle at the last samples" : "fronts still moving at the last sample"};
    }
    return rep;
}

// ---- staircase -------------------------------------------------------------------

std::string to_string(Certificate c) { return c == Certificate::segment ? "segment" : "point"; }

namespace {

struct SideStop {
    double position = 0.0; // arclength from the side's Gamma point reached by the horizon
    double base = 0.0;     // lambda times the time it got there
};

SideStop side_stop(const BoundaryMotionSpec& spec, bool left, double lambda, double T) {
    const MotionSample f = spec.fronts(std::min(T, spec.motion.back().t));
    SideStop s;
    s.position = left ? f.s_left : f.s_right;
    s.base = lambda * std::min(T, spec.passage_time(left, s.position));
    return s;
}

} // namespace

double staircase_value(const BoundaryMotionSpec& spec, double lambda, int arc, double arclength) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    if (arc == 0) return 0.0;
    const double T = spec.horizon(lambda);
    const double top = lambda * T;
    const double collar = 1.0 / lambda;
    const double Lp = spec.sigma_prime.length();
    double value = top;
    for (const bool left : {false, true}) {
        const double d = left ? Lp - arclength : arclength;
        const SideStop st = side_stop(spec, left, lambda, T);
        double v;
        if (d <= st.position) v = lambda * std::min(T, spec.passage_time(left, d));
        else v = st.base + smoothstep5((d - st.position) / collar) * (top - st.base);
        value = std::min(value, v);
    }
    return std::clamp(value, 0.0, top);
}

StaircaseData staircase(const BoundaryMotionSpec& spec, const Grid& grid, double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    if (grid.kind() != GridKind::cartesian2d) throw SpecificationError("boundary flows need a cartesian2d grid");
    check_readable(spec);
    const Outline outline(spec, outline_spacing(spec));
    ScalarField mask = build_mask(grid, [&outline](const Vec2& p) { return outline.inside(p); });

    StaircaseData out;
    out.lambda = lambda;
    out.horizon = spec.horizon(lambda);
    out.collar = 1.0 / lambda;

    // Stop points on Sigma' where the trace jumps to the top cap.
    const double Lp = spec.sigma_prime.length();
    std::vector<Vec2> stops;
    for (const bool left : {false, true}) {
        const SideStop st = side_stop(spec, left, lambda, out.horizon);
        if (st.base < lambda * out.horizon) stops.push_back(spec.sigma_prime.point(left ? Lp - st.position : st.position));
    }
    const double delta = grid.max_spacing();

    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (mask.mask()[k] != NodeClass::boundary) continue;
        const Vec2 x = grid.position(grid.node(k));
        const auto [s0, d0] = spec.sigma.project(x);
        const auto [s1, d1] = spec.sigma_prime.project(x);
        TraceNode t;
        t.node = grid.node(k);
        t.arc = d1 < d0 ? 1 : 0;
        t.arclength = t.arc ? s1 : s0;
        t.foot = t.arc ? spec.sigma_prime.point(s1) : spec.sigma.point(s0);
        t.value = staircase_value(spec, lambda, t.arc, t.arclength);
        for (const Vec2& s : stops) {
            if ((t.foot - s).norm() <= delta) t.certificate = Certificate::segment;
        }
        values[k] = t.value;
        out.nodes.push_back(t);
    }
    out.dirichlet = mask.with_values(std::move(values));
    return out;
}

// ---- solve -------------------------------------------------------------------------

BoundaryFlowResult solve_boundary_flow(const BoundaryMotionSpec& spec, const Grid& grid,
                                       const std::vector<double>& schedule, const SolverOptions& opts) {
    BoundaryFlowResult out;
    out.hypotheses = validate_hypotheses(spec);
    for (int h : {1, 3, 4}) {
        if (!out.hypotheses.items[h - 1].pass) {
            throw PreconditionError("boundary hypothesis (" + std::to_string(h) +
                                    ") fails: " + out.hypotheses.items[h - 1].detail);
        }
    }
    if (schedule.empty()) throw ParameterError("empty lambda schedule");

    const BoundaryDataFn data = [&](double lambda) {
        out.staircases.push_back(staircase(spec, grid, lambda));
        return out.staircases.back().dirichlet;
    };

    // Probe set for successive differences: interior nodes away from Gamma.
    const ScalarField mask = staircase(spec, grid, schedule.front()).dirichlet;
    const double keep_off = 0.1 * (spec.sigma.start() - spec.sigma.end()).norm();
    NodeSet probe(grid.size(), 0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (mask.mask()[k] != NodeClass::interior) continue;
        const Vec2 x = grid.position(grid.node(k));
        probe[k] = (x - spec.sigma.start()).norm() > keep_off && (x - spec.sigma.end()).norm() > keep_off;
    }

    SolverOptions o = opts;
    o.scheme = SolverOptions::Scheme::conservative;
    out.ladder = lambda_ladder(spec.region, data, schedule, &probe, o);
    out.u = u_lambda(out.ladder.solutions.back());
    out.horizon = spec.horizon(schedule.back());
    const double level = (1.0 - spec.reach_margin) * out.horizon;
    out.not_reached.assign(grid.size(), 0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out.not_reached[k] = out.u.mask()[k] == NodeClass::interior && out.u.values()[k] >= level;
    }
    return out;
}

// ---- limit curve -------------------------------------------------------------------

double polyline_hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    if (a.empty() || b.empty()) throw PreconditionError("Hausdorff distance of an empty polyline");
    const auto one_way = [](const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
        double worst = 0.0;
        for (const Vec2& x : p) {
            double best = q.size() == 1 ? (x - q[0]).norm() : inf;
            for (std::size_t k = 1; k < q.size(); ++k) best = std::min(best, segment_distance(x, q[k - 1], q[k]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_way(a, b), one_way(b, a));
}

LimitCurve limit_surface(const BoundaryMotionSpec& spec, const ScalarField& u, double horizon) {
    const Grid& g = u.grid();
    if (g.kind() != GridKind::cartesian2d) throw SpecificationError("limit curves need a cartesian2d grid");
    LimitCurve out;
    out.level = (1.0 - spec.reach_margin) * horizon;
    const std::vector<double>& v = u.values();
    const std::vector<NodeClass>& m = u.mask();

    bool reached = false;
    for (std::size_t k = 0; k < g.size(); ++k) reached = reached || (m[k] == NodeClass::interior && v[k] < out.level);
    if (!reached) throw DegenerateOutputError("no interior node is reached before the horizon");

    // Marching squares. Crossing points are keyed by edge so that segments chain up.
    // Edge key: 2 * node index + (0 horizontal, 1 vertical).
    const auto above = [&](std::size_t k) { return v[k] >= out.level; };
    const auto crossing = [&](std::size_t p, std::size_t q) {
        const double t = (out.level - v[p]) / (v[q] - v[p]);
        return Vec2(g.position(g.node(p)) + t * (g.position(g.node(q)) - g.position(g.node(p))));
    };
    std::map<long, Vec2> points;
    std::map<long, std::vector<long>> adjacent;
    const auto link = [&](long a, long b) {
        adjacent[a].push_back(b);
        adjacent[b].push_back(a);
    };
    for (int j = 0; j + 1 < g.n1(); ++j) {
        for (int i = 0; i + 1 < g.n0(); ++i) {
            const std::size_t c[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
            if (std::any_of(c, c + 4, [&](std::size_t k) { return m[k] == NodeClass::outside; })) continue;
            // Edges in order: bottom, right, top, left.
            const long key[4] = {2L * static_cast<long>(c[0]), 2L * static_cast<long>(c[1]) + 1,
                                 2L * static_cast<long>(c[3]), 2L * static_cast<long>(c[0]) + 1};
            const std::size_t ends[4][2] = {{c[0], c[1]}, {c[1], c[2]}, {c[3], c[2]}, {c[0], c[3]}};
            std::vector<int> cut;
            for (int e = 0; e < 4; ++e) {
                if (above(ends[e][0]) != above(ends[e][1])) {
                    cut.push_back(e);
                    points.emplace(key[e], crossing(ends[e][0], ends[e][1]));
                }
            }
            if (cut.size() == 2) {
                link(key[cut[0]], key[cut[1]]);
            } else if (cut.size() == 4) {
                const double centre = 0.25 * (v[c[0]] + v[c[1]] + v[c[2]] + v[c[3]]);
                // Corner 0 and 2 share a side; pair each cut edge with its neighbour around the
                // corner whose side differs from the centre.
                if (above(c[0]) == (centre >= out.level)) {
                    link(key[0], key[1]);
                    link(key[2], key[3]);
                } else {
                    link(key[0], key[3]);
                    link(key[1], key[2]);
                }
            }
        }
    }
    if (points.empty()) throw DegenerateOutputError("the reached region has no interior boundary");

    // Chain components, starting from open ends so that polylines are maximal.
    std::map<long, bool> seen;
    std::vector<std::vector<Vec2>> comps;
    const auto walk = [&](long start) {
        std::vector<Vec2> line{points.at(start)};
        seen[start] = true;
        long cur = start;
        for (;;) {
            long next = -1;
            for (long n : adjacent[cur]) {
                if (!seen[n]) {
                    next = n;
                    break;
                }
            }
            if (next < 0) break;
            seen[next] = true;
            line.push_back(points.at(next));
            cur = next;
        }
        comps.push_back(std::move(line));
    };
    for (const auto& [k, nb] : adjacent) {
        if (!seen[k] && nb.size() == 1) walk(k);
    }
    for (const auto& [k, nb] : adjacent) {
        if (!seen[k]) walk(k);
    }
    out.components = comps.size();
    const auto length = [](const std::vector<Vec2>& p) {
        double L = 0.0;
        for (std::size_t k = 1; k < p.size(); ++k) L += (p[k] - p[k - 1]).norm();
        return L;
    };
    std::size_t best = 0;
    for (std::size_t k = 1; k < comps.size(); ++k) {
        if (length(comps[k]) > length(comps[best])) best = k;
    }
    out.points = std::move(comps[best]);
    if (out.points.front()[0] > out.points.back()[0]) std::reverse(out.points.begin(), out.points.end());

    for (const Vec2& p : out.points) {
        out.straightness = std::max(out.straightness, segment_distance(p, out.points.front(), out.points.back()));
    }

    const MotionSample last = spec.motion.back();
    const double Lp = spec.sigma_prime.length();
    out.chord_left = spec.sigma_prime.point(Lp - last.s_left);
    out.chord_right = spec.sigma_prime.point(last.s_right);
    std::vector<Vec2> chord;
    const int n = 1024;
    for (int k = 0; k <= n; ++k) chord.push_back(out.chord_left + (static_cast<double>(k) / n) * (out.chord_right - out.chord_left));
    out.hausdorff_to_chord = polyline_hausdorff(out.points, chord);
    return out;
}

} // namespace mcf
