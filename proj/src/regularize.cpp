#include "mcf/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Sparse>

namespace mcf {

namespace {

using Scheme = SolverOptions::Scheme;

// Forward-mode derivative over the nine patch values.
struct Dual9 {
    double v = 0.0;
    std::array<double, 9> d{};
};
Dual9 operator+(Dual9 a, const Dual9& b) {
    a.v += b.v;
    for (std::size_t q = 0; q < 9; ++q) a.d[q] += b.d[q];
    return a;
}
Dual9 operator-(Dual9 a, const Dual9& b) {
    a.v -= b.v;
    for (std::size_t q = 0; q < 9; ++q) a.d[q] -= b.d[q];
    return a;
}
Dual9 operator*(Dual9 a, const Dual9& b) {
    for (std::size_t q = 0; q < 9; ++q) a.d[q] = a.d[q] * b.v + a.v * b.d[q];
    a.v *= b.v;
    return a;
}
Dual9 operator/(Dual9 a, const Dual9& b) {
    const double inv = 1.0 / b.v;
    for (std::size_t q = 0; q < 9; ++q) a.d[q] = (a.d[q] - a.v * inv * b.d[q]) * inv;
    a.v *= inv;
    return a;
}
Dual9 operator+(double c, Dual9 a) {
    a.v += c;
    return a;
}
Dual9 operator*(double c, Dual9 a) {
    a.v *= c;
    for (double& x : a.d) x *= c;
    return a;
}
Dual9 operator/(Dual9 a, double c) { return (1.0 / c) * a; }
Dual9 operator/(double c, const Dual9& b) {
    Dual9 one;
    one.v = c;
    return one / b;
}
Dual9 sqrt(Dual9 a) {
    const double s = std::sqrt(a.v);
    for (double& x : a.d) x *= 0.5 / s;
    a.v = s;
    return a;
}
using std::sqrt;

// Discrete operator on the interior nodes of a masked grid.
struct GraphOperator {
    Grid grid;
    std::vector<std::size_t> rows;     // interior node ids, one unknown each
    std::vector<long> unknown;         // node id -> unknown index or -1
    std::vector<Patch> patches;
    PatchWeights weights;
    Scheme scheme;

    explicit GraphOperator(const ScalarField& f, Scheme s = Scheme::nondivergence)
        : grid(f.grid()), unknown(f.grid().size(), -1), scheme(s) {
        if (grid.dimension() != 2) throw SpecificationError("translator graph solves need a 2D grid");
        if (scheme == Scheme::conservative && grid.kind() != GridKind::cartesian2d) {
            throw SpecificationError("the conservative scheme needs a cartesian2d grid");
        }
        weights = patch_weights(grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (f.mask()[k] != NodeClass::interior) continue;
            unknown[k] = static_cast<long>(rows.size());
            rows.push_back(k);
            patches.push_back(stencil_patch(grid, f.mask(), grid.node(k), true));
        }
    }

    struct Local {
        double L = 0.0;
        std::array<double, 9> dL{};
    };

    // L f = Lap f - f_i f_j f_ij / W^2, with the axisymmetric term f_r / r (2 f_rr on the axis).
    Local eval(std::size_t row, const std::vector<double>& v, bool with_jacobian) const {
        const Patch& p = patches[row];
        std::array<double, 5> d{};
        for (std::size_t op = 0; op < 5; ++op) {
            double s = 0.0;
            for (std::size_t q = 0; q < 9; ++q) {
                const double w = weights.w[op][q];
                if (w != 0.0) s += w * v[static_cast<std::size_t>(p.ids[q])];
            }
            d[op] = s;
        }
        const double fx = d[0], fy = d[1], fxx = d[2], fyy = d[3], fxy = d[4];
        const double W2 = 1.0 + fx * fx + fy * fy;
        const double Q = fx * fx * fxx + 2.0 * fx * fy * fxy + fy * fy * fyy;
        Local out;
        out.L = fxx + fyy - Q / W2;
        std::array<double, 5> dop{};
        dop[0] = -(2.0 * fx * fxx + 2.0 * fy * fxy) / W2 + 2.0 * fx * Q / (W2 * W2);
        dop[1] = -(2.0 * fx * fxy + 2.0 * fy * fyy) / W2 + 2.0 * fy * Q / (W2 * W2);
        dop[2] = 1.0 - fx * fx / W2;
        dop[3] = 1.0 - fy * fy / W2;
        dop[4] = -2.0 * fx * fy / W2;
        if (grid.kind() == GridKind::axisym_rz) {
            const int i = grid.node(rows[row]).i;
            if (i == 0) {
                out.L += fxx;
                dop[2] += 1.0;
            } else {
                const double r = grid.coord(0, i);
                out.L += fx / r;
                dop[0] += 1.0 / r;
            }
        }
        if (with_jacobian) {
            for (std::size_t q = 0; q < 9; ++q) {
                double s = 0.0;
                for (std::size_t op = 0; op < 5; ++op) s += dop[op] * weights.w[op][q];
                out.dL[q] = s;
            }
        }
        return out;
    }

    // Face-flux form div(Df/W) + lambda/W, fluxes on the four cell faces with the
    // tangential derivative averaged over the two adjacent columns.
    template <class T>
    T conservative(const std::array<T, 9>& f, double lambda) const {
        const double hx = grid.spacing(0), hy = grid.spacing(1);
        const auto flux = [](const T& gn, const T& gt) { return gn / sqrt(1.0 + gn * gn + gt * gt); };
        const T east = flux((f[7] - f[4]) / hx, ((f[5] - f[3]) + (f[8] - f[6])) / (4.0 * hy));
        const T west = flux((f[4] - f[1]) / hx, ((f[5] - f[3]) + (f[2] - f[0])) / (4.0 * hy));
        const T north = flux((f[5] - f[4]) / hy, ((f[7] - f[1]) + (f[8] - f[2])) / (4.0 * hx));
        const T south = flux((f[4] - f[3]) / hy, ((f[7] - f[1]) + (f[6] - f[0])) / (4.0 * hx));
        const T gx = (f[7] - f[1]) / (2.0 * hx), gy = (f[5] - f[3]) / (2.0 * hy);
        return (east - west) / hx + (north - south) / hy + lambda / sqrt(1.0 + gx * gx + gy * gy);
    }

    // Scaled residual of one row and, optionally, its derivatives over the patch.
    double row(std::size_t k, const std::vector<double>& v, double lambda, std::array<double, 9>* d) const {
        const Patch& p = patches[k];
        if (scheme == Scheme::nondivergence) {
            const Local l = eval(k, v, d != nullptr);
            if (d) {
                for (std::size_t q = 0; q < 9; ++q) (*d)[q] = l.dL[q] / lambda;
            }
            return (l.L + lambda) / lambda;
        }
        if (!d) {
            std::array<double, 9> f{};
            for (std::size_t q = 0; q < 9; ++q) f[q] = v[static_cast<std::size_t>(p.ids[q])];
            return conservative(f, lambda) / lambda;
        }
        std::array<Dual9, 9> f{};
        for (std::size_t q = 0; q < 9; ++q) {
            f[q].v = v[static_cast<std::size_t>(p.ids[q])];
            f[q].d[q] = 1.0;
        }
        const Dual9 r = conservative(f, lambda);
        for (std::size_t q = 0; q < 9; ++q) (*d)[q] = r.d[q] / lambda;
        return r.v / lambda;
    }

    std::vector<double> residual(const std::vector<double>& v, double lambda, Exec exec) const {
        std::vector<double> r(rows.size(), 0.0);
        for_each_index(rows.size(), exec, [&](std::size_t k) { r[k] = row(k, v, lambda, nullptr); });
        return r;
    }

    Eigen::SparseMatrix<double> jacobian(const std::vector<double>& v, double lambda, Exec exec) const {
        using T = Eigen::Triplet<double>;
        std::vector<std::array<double, 9>> local(rows.size());
        for_each_index(rows.size(), exec, [&](std::size_t k) { row(k, v, lambda, &local[k]); });
        std::vector<T> trip;
        trip.reserve(rows.size() * 9);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const Patch& p = patches[k];
            for (std::size_t q = 0; q < 9; ++q) {
                // Explicit zeros keep the sparsity pattern fixed across Newton steps.
                const double w = local[k][q];
                const long col = unknown[static_cast<std::size_t>(p.ids[q])];
                if (col >= 0) trip.emplace_back(static_cast<int>(k), static_cast<int>(col), w);
            }
        }
        const int n = static_cast<int>(rows.size());
        Eigen::SparseMatrix<double> J(n, n);
        J.setFromTriplets(trip.begin(), trip.end());
        return J;
    }
};

double sup_norm(const std::vector<double>& r) {
    double m = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    return m;
}

// Reciprocal of the largest diagonal entry of the Jacobian: the explicit stability step.
double pseudo_time_scale(const Eigen::SparseMatrix<double>& J) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < J.rows(); ++k) m = std::max(m, std::abs(J.coeff(k, k)));
    return m > 0.0 ? 1.0 / m : 1.0;
}

void require_mean_convex(const DomainSpec& domain) {
    if (domain.kind == DomainSpec::Kind::lens) return; // piecewise smooth, validated by the boundary module
    const ConvexityReport rep = validate_mean_convex(domain, 256);
    if (!rep.pass) throw SpecificationError("domain is not mean convex");
}

} // namespace

std::vector<double> translator_graph_residual(const ScalarField& f, double lambda, Exec exec, Scheme scheme) {
    const GraphOperator op(f, scheme);
    const std::vector<double> r = op.residual(f.values(), lambda, exec);
    std::vector<double> out(f.grid().size(), 0.0);
    for (std::size_t k = 0; k < op.rows.size(); ++k) out[op.rows[k]] = r[k];
    return out;
}

RegularizedSolution solve_translator_graph(const DomainSpec& domain, const ScalarField& dirichlet, double lambda,
                                           const ScalarField* init, const SolverOptions& opts) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    require_mean_convex(domain);
    const GraphOperator op(dirichlet, opts.scheme);
    if (op.rows.empty()) throw ResolutionError("no interior nodes to solve for");

    std::vector<double> v = dirichlet.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (dirichlet.mask()[k] == NodeClass::outside) v[k] = 0.0;
    }
    if (init) {
        if (!(init->grid() == dirichlet.grid())) throw PreconditionError("initial guess lives on a different grid");
        for (std::size_t k : op.rows) v[k] = init->values()[k];
    }

    RegularizedSolution sol;
    sol.lambda = lambda;
    sol.domain = domain;

    std::vector<double> r = op.residual(v, lambda, opts.exec);
    double norm = sup_norm(r);
    sol.trace.emplace_back(lambda, norm);

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    int it = 0;
    // Pseudo-time step; 0 means plain Newton with a halving line search. When the line
    // search fails the solver switches to implicit pseudo-time stepping (J - I/dt) d = -r,
    // growing dt with the residual ratio until Newton takes over again.
    double dt = 0.0;
    while (norm > opts.tolerance) {
        if (it >= opts.max_iterations) {
            throw NonConvergenceError("Newton iteration limit reached at lambda = " + std::to_string(lambda),
                                      dirichlet.with_values(v), norm);
        }
        Eigen::SparseMatrix<double> J = op.jacobian(v, lambda, opts.exec);
        if (dt > 0.0) {
            for (Eigen::Index k = 0; k < J.rows(); ++k) J.coeffRef(k, k) -= 1.0 / dt;
        }
        if (it == 0) lu.analyzePattern(J);
        lu.factorize(J);
        if (lu.info() != Eigen::Success) {
            throw NonConvergenceError("singular Newton Jacobian at lambda = " + std::to_string(lambda),
                                      dirichlet.with_values(v), norm);
        }
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(r.size()));
        for (std::size_t k = 0; k < r.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = -r[k];
        const Eigen::VectorXd delta = lu.solve(rhs);
        ++it;

        std::vector<double> trial = v;
        if (dt > 0.0) {
            for (std::size_t k = 0; k < op.rows.size(); ++k) {
                trial[op.rows[k]] = v[op.rows[k]] + delta[static_cast<Eigen::Index>(k)];
            }
            std::vector<double> rt = op.residual(trial, lambda, opts.exec);
            const double nt = sup_norm(rt);
            if (!std::isfinite(nt) || nt > 4.0 * norm) {
                dt *= 0.25;
                continue;
            }
            dt *= nt < norm ? std::clamp(norm / nt, 1.5, 10.0) : 0.5;
            if (dt > 1e6 * pseudo_time_scale(J)) dt = 0.0;
            v.swap(trial);
            r.swap(rt);
            norm = nt;
            sol.trace.emplace_back(lambda, norm);
            continue;
        }

        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < opts.max_halvings; ++h, step *= 0.5) {
            for (std::size_t k = 0; k < op.rows.size(); ++k) {
                trial[op.rows[k]] = v[op.rows[k]] + step * delta[static_cast<Eigen::Index>(k)];
            }
            std::vector<double> rt = op.residual(trial, lambda, opts.exec);
            const double nt = sup_norm(rt);
            if (std::isfinite(nt) && nt < (1.0 - 1e-2 * step) * norm) {
                v.swap(trial);
                r.swap(rt);
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!opts.pseudo_transient) {
                throw NonConvergenceError("Newton stagnated at lambda = " + std::to_string(lambda),
                                          dirichlet.with_values(v), norm);
            }
            dt = pseudo_time_scale(J);
        }
        sol.trace.emplace_back(lambda, norm);
    }
    sol.f = dirichlet.with_values(std::move(v));
    sol.residual = norm;
    sol.iterations = it;
    return sol;
}

RegularizedSolution solve_translator_graph(const DomainSpec& domain, const Grid& grid, double lambda,
                                           const ScalarField* init, const SolverOptions& opts) {
    return solve_translator_graph(domain, build_mask(domain, grid), lambda, init, opts);
}

CurvatureDiagnostics graph_curvatures(const ScalarField& f, NodeIndex node) {
    const Vec2 p = gradient(f, node);
    const Mat2 H = hessian(f, node);
    const double W2 = 1.0 + p.squaredNorm();
    const double W = std::sqrt(W2);
    // Shape operator g^{-1} A with g = I + p p^T and A = -Hess f / W.
    const Mat2 ginv = Mat2::Identity() - p * p.transpose() / W2;
    const Mat2 S = ginv * (-H / W);
    CurvatureDiagnostics out;
    const auto ev = eigenvalues_2x2(S);
    out.kappa = {ev[0], ev[1]};
    if (f.grid().kind() == GridKind::axisym_rz) {
        const double r = f.grid().coord(0, node.i);
        const double rot = node.i == 0 ? -H(0, 0) / W : -(p[0] / r) / W;
        out.kappa.push_back(rot);
    }
    std::sort(out.kappa.begin(), out.kappa.end());
    out.h = 0.0;
    for (double k : out.kappa) out.h += k;
    out.grad_norm = p.norm();
    out.regular = out.h > 0.0;
    if (out.regular) out.ratio = out.kappa.front() / out.h;
    return out;
}

CurvatureDiagnostics graph_curvatures(const RegularizedSolution& solution, NodeIndex node) {
    return graph_curvatures(solution.f, node);
}

ScalarField u_lambda(const RegularizedSolution& solution) {
    std::vector<double> u = solution.f.values();
    for (double& x : u) x /= solution.lambda;
    return solution.f.with_values(std::move(u));
}

namespace {

LadderSummary summarize(const RegularizedSolution& s) {
    LadderSummary out;
    out.lambda = s.lambda;
    out.iterations = s.iterations;
    out.residual = s.residual;
    const Box box = bounding_box(s.domain);
    const Vec2 c = 0.5 * (box.lo + box.hi);
    const Vec2 center(s.domain.dimension == 3 ? 0.0 : c[0], c[1]);
    double best = std::numeric_limits<double>::infinity();
    out.min_kappa_first = std::numeric_limits<double>::infinity();
    out.max_kappa_last = -std::numeric_limits<double>::infinity();
    const Grid& g = s.f.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (s.f.mask()[k] != NodeClass::interior) continue;
        const NodeIndex n = g.node(k);
        const double d = (g.position(n) - center).norm();
        if (d < best) {
            best = d;
            out.center_value = s.f.values()[k];
        }
        const CurvatureDiagnostics cd = graph_curvatures(s.f, n);
        out.max_gradient = std::max(out.max_gradient, cd.grad_norm);
        out.min_kappa_first = std::min(out.min_kappa_first, cd.kappa_first());
        out.max_kappa_last = std::max(out.max_kappa_last, cd.kappa_last());
    }
    return out;
}

} // namespace

LadderResult lambda_ladder(const DomainSpec& domain, const BoundaryDataFn& data, const std::vector<double>& schedule,
                           const NodeSet* probe, const SolverOptions& opts) {
    if (schedule.empty()) throw ParameterError("lambda schedule is empty");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0) || (k > 0 && !(schedule[k] > schedule[k - 1]))) {
            throw ParameterError("lambda schedule must be strictly increasing and positive");
        }
    }
    LadderResult out;
    out.schedule = schedule;
    std::optional<ScalarField> previous_u;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double lambda = schedule[k];
        const ScalarField dirichlet = data(lambda);
        std::optional<ScalarField> init;
        if (!out.solutions.empty()) {
            const RegularizedSolution& prev = out.solutions.back();
            std::vector<double> v = prev.f.values();
            const double scale = lambda / prev.lambda;
            for (double& x : v) x *= scale;
            init = dirichlet.with_values(std::move(v));
        }
        try {
            out.solutions.push_back(
                solve_translator_graph(domain, dirichlet, lambda, init ? &*init : nullptr, opts));
        } catch (const NonConvergenceError& e) {
            throw LadderError(std::string("ladder member failed: ") + e.what(), lambda,
                              std::make_shared<const LadderResult>(std::move(out)),
                              std::make_shared<const ScalarField>(e.iterate()));
        } catch (const Error& e) {
            throw LadderError(std::string("ladder member failed: ") + e.what(), lambda,
                              std::make_shared<const LadderResult>(std::move(out)));
        }
        const RegularizedSolution& s = out.solutions.back();
        out.summaries.push_back(summarize(s));
        const ScalarField u = u_lambda(s);
        if (previous_u) {
            double d = 0.0;
            for (std::size_t m = 0; m < u.values().size(); ++m) {
                const bool in = probe ? (*probe)[m] != 0 : u.mask()[m] == NodeClass::interior;
                if (in) d = std::max(d, std::abs(u.values()[m] - previous_u->values()[m]));
            }
            out.successive_differences.push_back(d);
        }
        previous_u = u;
    }
    return out;
}

LadderResult lambda_ladder(const DomainSpec& domain, const Grid& grid, const std::vector<double>& schedule,
                           const NodeSet* probe, const SolverOptions& opts) {
    const ScalarField mask = build_mask(domain, grid);
    return lambda_ladder(
        domain, [&](double) { return mask; }, schedule, probe, opts);
}

double epsilon_grid(const Grid& grid, const std::vector<double>& q, const NodeSet& K, const NodeSet& dK) {
    return 5.0 * grid.max_spacing() * lipschitz_near(grid, q, K, dK);
}

InequalityCheck gradient_boundary_max(const ScalarField& f, const NodeSet& K) {
    const Grid& g = f.grid();
    const NodeSet dK = relative_boundary(g, K);
    std::vector<double> q(g.size(), std::numeric_limits<double>::quiet_NaN());
    InequalityCheck c;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!K[k]) continue;
        q[k] = gradient(f, g.node(k)).norm();
        if (dK[k]) c.boundary = std::max(c.boundary, q[k]);
        else c.interior = std::max(c.interior, q[k]);
    }
    c.epsilon_grid = epsilon_grid(g, q, K, dK);
    c.pass = c.interior <= c.boundary + c.epsilon_grid;
    return c;
}

InequalityCheck translator_ratio_inequality(const ScalarField& f, const NodeSet& K) {
    const Grid& g = f.grid();
    const NodeSet dK = relative_boundary(g, K);
    std::vector<double> q(g.size(), std::numeric_limits<double>::quiet_NaN());
    InequalityCheck c;
    c.interior = std::numeric_limits<double>::infinity();
    c.boundary = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!K[k]) continue;
        const CurvatureDiagnostics cd = graph_curvatures(f, g.node(k));
        if (!cd.regular) continue;
        q[k] = cd.ratio;
        if (dK[k]) c.boundary = std::min(c.boundary, q[k]);
        else c.interior = std::min(c.interior, q[k]);
    }
    c.epsilon_grid = epsilon_grid(g, q, K, dK);
    c.pass = c.interior >= c.boundary - c.epsilon_grid;
    return c;
}

double mean_curvature_identity_defect(const RegularizedSolution& solution) {
    double worst = 0.0;
    const Grid& g = solution.f.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (solution.f.mask()[k] != NodeClass::interior) continue;
        const CurvatureDiagnostics cd = graph_curvatures(solution.f, g.node(k));
        const double W = std::sqrt(1.0 + cd.grad_norm * cd.grad_norm);
        worst = std::max(worst, std::abs(cd.h * W / solution.lambda - 1.0));
    }
    return worst;
}

NodeSet superlevel_set(const ScalarField& u, double fraction) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < u.values().size(); ++k) {
        if (u.mask()[k] == NodeClass::interior) top = std::max(top, u.values()[k]);
    }
    NodeSet K(u.values().size(), 0);
    for (std::size_t k = 0; k < u.values().size(); ++k) {
        K[k] = (u.mask()[k] == NodeClass::interior && u.values()[k] >= fraction * top) ? 1 : 0;
    }
    return K;
}

NodeSet ball_set(const ScalarField& field, const Vec2& center, double radius) {
    const Grid& g = field.grid();
    NodeSet K(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (field.mask()[k] != NodeClass::interior) continue;
        K[k] = (g.position(g.node(k)) - center).norm() <= radius ? 1 : 0;
    }
    return K;
}

NodeSet deep_interior(const ScalarField& field) {
    const Grid& g = field.grid();
    NodeSet K(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (field.mask()[k] != NodeClass::interior) continue;
        const NodeIndex n = g.node(k);
        bool ok = true;
        for (int a = -1; a <= 1 && ok; ++a) {
            for (int b = -1; b <= 1 && ok; ++b) {
                int i = n.i + a;
                const int j = n.j + b;
                if (i < 0 && g.has_axis()) i = -i;
                ok = g.contains(i, j) && field.mask()[g.index(i, j)] == NodeClass::interior;
            }
        }
        K[k] = ok ? 1 : 0;
    }
    return K;
}

} // namespace mcf
