#include "mcf/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcf {

std::string to_string(TangentType t) {
    switch (t) {
    case TangentType::unclassified: return "unclassified";
    case TangentType::sphere: return "sphere";
    case TangentType::cylinder: return "cylinder";
    case TangentType::unknown: return "unknown";
    }
    return "unknown";
}

namespace {

// Graph mean curvature h(N_lambda) of f = lambda u at every interior node.
std::vector<double> graph_mean_curvature(const ScalarField& u, double lambda, Exec exec) {
    const Grid& g = u.grid();
    std::vector<double> f = u.values();
    for (double& x : f) x *= lambda;
    const ScalarField F = u.with_values(std::move(f));
    std::vector<double> h(g.size(), 0.0);
    for_each_index(g.size(), exec, [&](std::size_t k) {
        if (u.mask()[k] == NodeClass::interior) h[k] = graph_curvatures(F, g.node(k)).h;
    });
    return h;
}

std::vector<char> nonregular_flags(const ScalarField& u, double eps_reg, Exec exec) {
    const std::vector<CurvatureDiagnostics> d = diagnose_field(u, eps_reg, exec);
    std::vector<char> out(d.size(), 0);
    for (std::size_t k = 0; k < d.size(); ++k) out[k] = (u.mask()[k] == NodeClass::interior && !d[k].regular);
    return out;
}

// Connected components (8-neighbour) of the flagged nodes, in index order.
std::vector<std::vector<std::size_t>> components(const Grid& g, const std::vector<char>& flag) {
    std::vector<long> label(g.size(), -1);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (!flag[s] || label[s] >= 0) continue;
        std::vector<std::size_t> comp{s};
        label[s] = static_cast<long>(out.size());
        for (std::size_t head = 0; head < comp.size(); ++head) {
            const NodeIndex n = g.node(comp[head]);
            for (int a = -1; a <= 1; ++a) {
                for (int b = -1; b <= 1; ++b) {
                    if (!g.contains(n.i + a, n.j + b)) continue;
                    const std::size_t m = g.index(n.i + a, n.j + b);
                    if (flag[m] && label[m] < 0) {
                        label[m] = label[s];
                        comp.push_back(m);
                    }
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

} // namespace

SingularityReport detect_singular(const std::vector<double>& lambdas, const std::vector<ScalarField>& u, Exec exec) {
    if (lambdas.size() != u.size()) throw PreconditionError("one u field per lambda is required");
    if (lambdas.size() < 3) throw PreconditionError("singular detection needs a ladder with at least 3 members");
    for (std::size_t k = 1; k < u.size(); ++k) {
        if (!(u[k].grid() == u[0].grid()) || u[k].mask() != u[0].mask()) {
            throw PreconditionError("u fields live on mismatched grids");
        }
    }
    const Grid& g = u[0].grid();
    SingularityReport rep;
    rep.lambdas = lambdas;
    rep.dimension = g.kind() == GridKind::axisym_rz ? 3 : 2;
    rep.eps_reg = regularity_threshold(g);
    rep.h_max_resolvable = h_max_resolvable(g);

    const std::size_t L = lambdas.size();
    std::vector<std::vector<char>> nonreg(L);
    std::vector<std::vector<double>> hgraph(L);
    for (std::size_t k = 0; k < L; ++k) {
        nonreg[k] = nonregular_flags(u[k], rep.eps_reg, exec);
        hgraph[k] = graph_mean_curvature(u[k], lambdas[k], exec);
    }

    std::vector<char> flag(g.size(), 0);
    std::size_t nonreg_last = 0;
    for (std::size_t m = 0; m < g.size(); ++m) {
        if (u[0].mask()[m] != NodeClass::interior) continue;
        nonreg_last += nonreg[L - 1][m] ? 1 : 0;
        const bool persistent = nonreg[L - 1][m] && nonreg[L - 2][m];
        const bool unresolved = hgraph[L - 1][m] > rep.h_max_resolvable && hgraph[L - 2][m] > rep.h_max_resolvable;
        flag[m] = (persistent || unresolved) ? 1 : 0;
    }
    rep.nonregular_measure = static_cast<double>(nonreg_last) * g.cell_measure();

    const double delta = g.max_spacing();
    for (const std::vector<std::size_t>& comp : components(g, flag)) {
        SingularCandidate c;
        c.node_count = comp.size();
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t m : comp) {
            const NodeIndex n = g.node(m);
            c.centroid += g.position(n);
            if (g.has_axis() && n.i == 0) c.on_axis = true;
            if (hgraph[L - 1][m] > best) {
                best = hgraph[L - 1][m];
                c.peak = n;
            }
        }
        c.centroid /= static_cast<double>(comp.size());
        c.peak_position = g.position(c.peak);

        // Neighbourhood: interior nodes within the cluster radius (about the peak) plus 2 Delta.
        double radius = 0.0;
        for (std::size_t m : comp) radius = std::max(radius, (g.position(g.node(m)) - c.peak_position).norm());
        radius += 2.0 * delta;
        c.blowup_trace.assign(L, 0.0);
        c.nonregular_counts.assign(L, 0);
        for (std::size_t m = 0; m < g.size(); ++m) {
            if (u[0].mask()[m] != NodeClass::interior) continue;
            if ((g.position(g.node(m)) - c.peak_position).norm() > radius) continue;
            for (std::size_t k = 0; k < L; ++k) {
                c.blowup_trace[k] = std::max(c.blowup_trace[k], hgraph[k][m]);
                c.nonregular_counts[k] += nonreg[k][m] ? 1 : 0;
            }
        }
        c.blowup_increasing = true;
        for (std::size_t k = 1; k < L; ++k) c.blowup_increasing &= c.blowup_trace[k] > c.blowup_trace[k - 1];
        rep.candidates.push_back(std::move(c));
    }
    return rep;
}

SingularityReport detect_singular(const LadderResult& ladder, Exec exec) {
    std::vector<ScalarField> u;
    u.reserve(ladder.solutions.size());
    for (const RegularizedSolution& s : ladder.solutions) u.push_back(u_lambda(s));
    return detect_singular(ladder.schedule, u, exec);
}

SingularityReport classify_tangent(SingularityReport report, const ScalarField& u, Exec exec) {
    const Grid& g = u.grid();
    const double delta = g.max_spacing();
    const std::vector<CurvatureDiagnostics> diag = diagnose_field(u, report.eps_reg, exec);
    const double tol = report.tolerance;

    for (SingularCandidate& c : report.candidates) {
        const double u_peak = u.value(c.peak);
        c.shells.clear();
        int usable = 0;
        double outer = 0.0;
        for (int mult : {2, 4, 8, 16, 32, 64}) {
            if (mult > 16 && usable >= 2) break;
            ShellTrace s;
            s.distance = mult * delta;
            for (std::size_t m = 0; m < g.size(); ++m) {
                if (u.mask()[m] != NodeClass::interior || !(u.values()[m] < u_peak)) continue;
                const double d = (g.position(g.node(m)) - c.peak_position).norm();
                if (std::abs(d - s.distance) >= delta) continue;
                ++s.probes;
                if (!diag[m].regular) continue;
                ++s.regular_probes;
                s.ratio_first += diag[m].ratio;
                s.ratio_last += diag[m].ratio_last();
            }
            if (s.regular_probes > 0) {
                s.ratio_first /= s.regular_probes;
                s.ratio_last /= s.regular_probes;
                ++usable;
                outer = s.distance;
            }
            c.shells.push_back(s);
        }
        if (usable == 0) {
            c.type = TangentType::unknown;
            c.note = "no regular probes on any shell";
            continue;
        }

        // Least-squares line through the usable shells, evaluated at distance 0.
        double sd = 0.0, sdd = 0.0, s1 = 0.0, sl = 0.0, s1d = 0.0, sld = 0.0;
        for (const ShellTrace& s : c.shells) {
            if (s.regular_probes == 0) continue;
            sd += s.distance;
            sdd += s.distance * s.distance;
            s1 += s.ratio_first;
            sl += s.ratio_last;
            s1d += s.ratio_first * s.distance;
            sld += s.ratio_last * s.distance;
        }
        const double n = usable;
        if (usable >= 2) {
            const double det = n * sdd - sd * sd;
            c.limit_first = (sdd * s1 - sd * s1d) / det;
            c.limit_last = (sdd * sl - sd * sld) / det;
        } else {
            c.limit_first = s1;
            c.limit_last = sl;
        }

        c.min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < g.size(); ++m) {
            if (u.mask()[m] != NodeClass::interior || !(u.values()[m] < u_peak) || !diag[m].regular) continue;
            if ((g.position(g.node(m)) - c.peak_position).norm() < outer + delta) {
                c.min_ratio = std::min(c.min_ratio, diag[m].ratio);
            }
        }
        c.convex_type = c.min_ratio >= -tol;

        const auto near = [&](double a, double b) { return std::abs(c.limit_first - a) <= tol && std::abs(c.limit_last - b) <= tol; };
        if (report.dimension == 2) {
            c.type = near(1.0, 1.0) ? TangentType::sphere : TangentType::unknown;
        } else if (near(0.5, 0.5)) {
            c.type = TangentType::sphere;
        } else if (near(0.0, 1.0)) {
            c.type = TangentType::cylinder;
        } else {
            c.type = TangentType::unknown;
        }
        if (c.type == TangentType::unknown) c.note = "ratio limits match no admissible signature";
    }
    return report;
}

std::vector<const SingularCandidate*> axis_candidates_near(const SingularityReport& report, double z0,
                                                           double tolerance) {
    std::vector<const SingularCandidate*> out;
    for (const SingularCandidate& c : report.candidates) {
        if (c.on_axis && std::abs(c.centroid[1] - z0) <= tolerance) out.push_back(&c);
    }
    return out;
}

} // namespace mcf
