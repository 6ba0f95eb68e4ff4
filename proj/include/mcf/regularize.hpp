#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mcf/curvature.hpp"
#include "mcf/domain.hpp"
#include "mcf/errors.hpp"
#include "mcf/mesh.hpp"
#include "mcf/parallel.hpp"

namespace mcf {

struct SolverOptions {
    /// nondivergence: Lap f - f_i f_j f_ij / W^2 + lambda at each node (residual / lambda).
    /// conservative: face fluxes, div(Df/W) + lambda / W (residual / lambda); cartesian grids
    /// only. Its fluxes stay bounded across near-vertical parts of the graph.
    enum class Scheme { nondivergence, conservative };
    Scheme scheme = Scheme::nondivergence;
    double tolerance = 1e-8; // sup-norm of the residual divided by lambda
    int max_iterations = 200;
    int max_halvings = 8;
    bool pseudo_transient = true; // fall back to pseudo-time stepping when the line search fails
    Exec exec = Exec::parallel;
};

/// One converged solve of the downward translator graph equation
///   Lap f - f_i f_j f_ij / (1 + |Df|^2) + lambda = 0,   f = g on boundary nodes.
struct RegularizedSolution {
    double lambda = 0.0;
    DomainSpec domain;
    ScalarField f; // mask carries interior / Dirichlet / outside
    double residual = 0.0;
    int iterations = 0;
    std::vector<std::pair<double, double>> trace; // (lambda, residual) per Newton iterate
};

/// Newton stagnated; carries the last iterate.
class NonConvergenceError : public NumericError {
public:
    NonConvergenceError(const std::string& what, ScalarField iterate, double residual)
        : NumericError(what), iterate_(std::move(iterate)), residual_(residual) {}
    const ScalarField& iterate() const { return iterate_; }
    double residual() const { return residual_; }

private:
    ScalarField iterate_;
    double residual_;
};

/// Residual (L f + lambda) / lambda at every interior node (0 elsewhere).
std::vector<double> translator_graph_residual(const ScalarField& f, double lambda, Exec exec = Exec::parallel,
                                              SolverOptions::Scheme scheme = SolverOptions::Scheme::nondivergence);

/// Solve on `dirichlet` (mask layer with Dirichlet values in the boundary slots).
RegularizedSolution solve_translator_graph(const DomainSpec& domain, const ScalarField& dirichlet, double lambda,
                                           const ScalarField* init = nullptr, const SolverOptions& opts = {});
/// Zero-data convenience overload: builds the mask from the domain.
RegularizedSolution solve_translator_graph(const DomainSpec& domain, const Grid& grid, double lambda,
                                           const ScalarField* init = nullptr, const SolverOptions& opts = {});

struct LadderSummary {
    double lambda = 0.0;
    double center_value = 0.0;
    double max_gradient = 0.0;
    double min_kappa_first = 0.0;
    double max_kappa_last = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct LadderResult {
    std::vector<double> schedule;
    std::vector<LadderSummary> summaries;
    /// sup over the probe set of |u_{lambda_{k+1}} - u_{lambda_k}|
    std::vector<double> successive_differences;
    std::vector<RegularizedSolution> solutions;
};

/// Failure of one member of a ladder. Carries the members solved before it and, when
/// Newton stagnated, its last iterate.
class LadderError : public NumericError {
public:
    LadderError(const std::string& what, double lambda, std::shared_ptr<const LadderResult> partial = nullptr,
                std::shared_ptr<const ScalarField> iterate = nullptr)
        : NumericError(what), lambda_(lambda), partial_(std::move(partial)), iterate_(std::move(iterate)) {}
    double lambda() const { return lambda_; }
    const LadderResult* partial() const { return partial_.get(); }
    const ScalarField* iterate() const { return iterate_.get(); }

private:
    double lambda_;
    std::shared_ptr<const LadderResult> partial_;
    std::shared_ptr<const ScalarField> iterate_;
};

/// Dirichlet data per lambda: returns the mask layer with boundary slots filled.
using BoundaryDataFn = std::function<ScalarField(double lambda)>;

/// Continuation in lambda. Each member starts from the previous solution scaled by
/// the ratio of successive lambdas. `probe` defaults to all interior nodes.
LadderResult lambda_ladder(const DomainSpec& domain, const BoundaryDataFn& data, const std::vector<double>& schedule,
                           const NodeSet* probe = nullptr, const SolverOptions& opts = {});
LadderResult lambda_ladder(const DomainSpec& domain, const Grid& grid, const std::vector<double>& schedule,
                           const NodeSet* probe = nullptr, const SolverOptions& opts = {});

/// Principal curvatures of graph(f) with respect to the normal pointing down,
/// so that h = lambda / W on a solution.
CurvatureDiagnostics graph_curvatures(const RegularizedSolution& solution, NodeIndex node);
CurvatureDiagnostics graph_curvatures(const ScalarField& f, NodeIndex node);

/// u_lambda = f / lambda (values at every non-outside node).
ScalarField u_lambda(const RegularizedSolution& solution);

// ---- checks of the discrete max-principle statements -------------------------

struct InequalityCheck {
    double interior = 0.0;  // extremum over interior nodes of K
    double boundary = 0.0;  // extremum over the relative boundary of K
    double epsilon_grid = 0.0;
    bool pass = false;
};

/// sup_K |Df| <= sup_dK |Df| + eps_grid.
InequalityCheck gradient_boundary_max(const ScalarField& f, const NodeSet& K);
/// min_int(K) kappa_1/h of graph(f) >= min_dK kappa_1/h - eps_grid.
InequalityCheck translator_ratio_inequality(const ScalarField& f, const NodeSet& K);
/// max |h W / lambda - 1| over interior nodes (PDE/sign identity).
double mean_curvature_identity_defect(const RegularizedSolution& solution);

/// Nodes of the interior whose value is at least `fraction` of the interior maximum.
NodeSet superlevel_set(const ScalarField& u, double fraction);
/// Interior nodes within `radius` of `center` in the coordinate plane.
NodeSet ball_set(const ScalarField& field, const Vec2& center, double radius);
/// Interior nodes with a full 3x3 patch of interior nodes.
NodeSet deep_interior(const ScalarField& field);

/// eps_grid = 5 * Delta * (Lipschitz estimate of q near the boundary of K).
double epsilon_grid(const Grid& grid, const std::vector<double>& q, const NodeSet& K, const NodeSet& dK);

} // namespace mcf
