#pragma once

#include <string>
#include <vector>

#include "mcf/curvature.hpp"
#include "mcf/errors.hpp"
#include "mcf/mesh.hpp"
#include "mcf/parallel.hpp"

namespace mcf {

/// Largest level-set mean curvature the grid can represent: 1 / (4 Delta).
double h_max_resolvable(const Grid& grid);
/// Gradient threshold below which a node counts as a singular candidate:
/// max(10 Delta, 1 / (4 h_max_resolvable)).
double regularity_threshold(const Grid& grid);

/// Curvatures of the level set {u = u(node)} with normal grad u / |grad u|.
/// On axisymmetric grids the rotational curvature is appended. Nodes with
/// |grad u| < eps_reg or h <= 0 are returned with regular = false.
CurvatureDiagnostics level_set_curvatures(const ScalarField& u, NodeIndex node, double eps_reg);

/// level_set_curvatures at every interior node (default-constructed elsewhere).
std::vector<CurvatureDiagnostics> diagnose_field(const ScalarField& u, double eps_reg, Exec exec = Exec::parallel);

/// sup over K of |h |grad u| - 1|. Throws PreconditionError if K has non-regular nodes.
double arrival_residual(const ScalarField& u, const NodeSet& K, double eps_reg);

/// Curvatures of the product U(x, y) = u(x): a zero curvature appended and re-sorted.
CurvatureDiagnostics product_lift(const CurvatureDiagnostics& d);
/// Max over probes of |h(U) - h(u)| and |kappa_1(U) - min(0, kappa_1(u))|.
double product_lift_check(const ScalarField& u, const std::vector<NodeIndex>& probes, double eps_reg);

struct RatioBound {
    double interior_min = 0.0;
    double boundary_min = 0.0;
    double margin = 0.0; // interior_min - min(0, boundary_min)
    double epsilon_grid = 0.0;
    bool pass = false;
};

/// Minima of kappa_1 / h over the regular nodes of K and of its relative boundary.
/// Throws PreconditionError if a boundary node of K is not regular.
RatioBound ratio_bound_check(const ScalarField& u, const NodeSet& K, double eps_reg);

/// Largest excess of kappa_1 / h over 1 / (n - 1) among regular nodes.
double umbilicity_excess(const std::vector<CurvatureDiagnostics>& diags);

/// CSV with header `axis0,axis1,kappa1,kappa_last,h,ratio,grad_norm,regular` (interior nodes).
void write_curvature_csv(const ScalarField& u, const std::vector<CurvatureDiagnostics>& diags,
                         const std::string& path);

} // namespace mcf
