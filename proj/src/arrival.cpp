#include "mcf/arrival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mcf/regularize.hpp"

namespace mcf {

double h_max_resolvable(const Grid& grid) { return 1.0 / (4.0 * grid.max_spacing()); }

double regularity_threshold(const Grid& grid) {
    return std::max(10.0 * grid.max_spacing(), 1.0 / (4.0 * h_max_resolvable(grid)));
}

CurvatureDiagnostics level_set_curvatures(const ScalarField& u, NodeIndex node, double eps_reg) {
    const Grid& g = u.grid();
    if (g.kind() != GridKind::cartesian2d && g.kind() != GridKind::axisym_rz) {
        throw SpecificationError("level-set curvatures need a cartesian2d or axisym_rz grid");
    }
    const Vec2 p = gradient(u, node);
    const Mat2 H = hessian(u, node);
    CurvatureDiagnostics out;
    out.grad_norm = p.norm();
    if (!(out.grad_norm > 0.0)) return out;

    const Vec2 t(-p[1] / out.grad_norm, p[0] / out.grad_norm);
    out.kappa.push_back(-t.dot(H * t) / out.grad_norm);
    if (g.kind() == GridKind::axisym_rz) {
        const double r = g.coord(0, node.i);
        out.kappa.push_back(node.i == 0 ? -H(0, 0) / out.grad_norm : -(p[0] / r) / out.grad_norm);
    }
    std::sort(out.kappa.begin(), out.kappa.end());
    for (double k : out.kappa) out.h += k;
    if (out.h > 0.0) out.ratio = out.kappa.front() / out.h;
    out.regular = out.grad_norm >= eps_reg && out.h > 0.0;
    return out;
}

std::vector<CurvatureDiagnostics> diagnose_field(const ScalarField& u, double eps_reg, Exec exec) {
    const Grid& g = u.grid();
    std::vector<CurvatureDiagnostics> out(g.size());
    for_each_index(g.size(), exec, [&](std::size_t k) {
        if (u.mask()[k] == NodeClass::interior) out[k] = level_set_curvatures(u, g.node(k), eps_reg);
    });
    return out;
}

namespace {

std::string node_list(const Grid& g, const std::vector<std::size_t>& ids) {
    std::ostringstream os;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 8);
    for (std::size_t k = 0; k < shown; ++k) {
        const NodeIndex n = g.node(ids[k]);
        os << (k ? ", " : "") << "(" << n.i << "," << n.j << ")";
    }
    if (ids.size() > shown) os << ", ... (" << ids.size() << " nodes)";
    return os.str();
}

} // namespace

double arrival_residual(const ScalarField& u, const NodeSet& K, double eps_reg) {
    const Grid& g = u.grid();
    std::vector<std::size_t> bad;
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!K[k]) continue;
        if (u.mask()[k] != NodeClass::interior) {
            bad.push_back(k);
            continue;
        }
        const CurvatureDiagnostics d = level_set_curvatures(u, g.node(k), eps_reg);
        if (!d.regular) {
            bad.push_back(k);
            continue;
        }
        worst = std::max(worst, std::abs(d.h * d.grad_norm - 1.0));
    }
    if (!bad.empty()) throw PreconditionError("non-regular nodes in K: " + node_list(g, bad));
    return worst;
}

CurvatureDiagnostics product_lift(const CurvatureDiagnostics& d) {
    CurvatureDiagnostics out = d;
    out.kappa.push_back(0.0);
    std::sort(out.kappa.begin(), out.kappa.end());
    out.h = 0.0;
    for (double k : out.kappa) out.h += k;
    out.ratio = out.h > 0.0 ? out.kappa.front() / out.h : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double product_lift_check(const ScalarField& u, const std::vector<NodeIndex>& probes, double eps_reg) {
    double worst = 0.0;
    for (const NodeIndex& n : probes) {
        const CurvatureDiagnostics d = level_set_curvatures(u, n, eps_reg);
        if (d.kappa.empty()) continue;
        const CurvatureDiagnostics lift = product_lift(d);
        worst = std::max(worst, std::abs(lift.h - d.h));
        worst = std::max(worst, std::abs(lift.kappa_first() - std::min(0.0, d.kappa_first())));
    }
    return worst;
}

RatioBound ratio_bound_check(const ScalarField& u, const NodeSet& K, double eps_reg) {
    const Grid& g = u.grid();
    const NodeSet dK = relative_boundary(g, K);
    std::vector<double> q(g.size(), std::numeric_limits<double>::quiet_NaN());
    RatioBound out;
    out.interior_min = std::numeric_limits<double>::infinity();
    out.boundary_min = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!K[k]) continue;
        const CurvatureDiagnostics d = level_set_curvatures(u, g.node(k), eps_reg);
        if (!d.regular) {
            if (dK[k]) bad.push_back(k);
            continue;
        }
        q[k] = d.ratio;
        if (dK[k]) out.boundary_min = std::min(out.boundary_min, d.ratio);
        else out.interior_min = std::min(out.interior_min, d.ratio);
    }
    if (!bad.empty()) throw PreconditionError("non-regular nodes on the boundary of K: " + node_list(g, bad));
    out.epsilon_grid = epsilon_grid(g, q, K, dK);
    out.margin = out.interior_min - std::min(0.0, out.boundary_min);
    out.pass = out.margin >= -out.epsilon_grid;
    return out;
}

double umbilicity_excess(const std::vector<CurvatureDiagnostics>& diags) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const CurvatureDiagnostics& d : diags) {
        if (!d.regular) continue;
        worst = std::max(worst, d.ratio - 1.0 / static_cast<double>(d.kappa.size()));
    }
    return worst;
}

void write_curvature_csv(const ScalarField& u, const std::vector<CurvatureDiagnostics>& diags,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << "axis0,axis1,kappa1,kappa_last,h,ratio,grad_norm,regular\n";
    const Grid& g = u.grid();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    char buf[512];
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (u.mask()[k] != NodeClass::interior) continue;
        const CurvatureDiagnostics& d = diags[k];
        const Vec2 x = g.position(g.node(k));
        const bool have = !d.kappa.empty();
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", x[0], x[1],
                      have ? d.kappa_first() : nan, have ? d.kappa_last() : nan, have ? d.h : nan, d.ratio,
                      d.grad_norm, d.regular ? 1 : 0);
        out << buf;
    }
}

} // namespace mcf
