#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mcf {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class GridKind { line, radial, cartesian2d, axisym_rz };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& name);

enum class NodeClass : std::uint8_t { interior, boundary, outside };

std::string to_string(NodeClass c);
NodeClass node_class_from_string(const std::string& name);

struct NodeIndex {
    int i = 0;
    int j = 0;
    friend bool operator==(NodeIndex a, NodeIndex b) { return a.i == b.i && a.j == b.j; }
};

/// Uniform structured grid. Axis 0 is x (or r), axis 1 is y (or z).
/// One-dimensional kinds have a single node along axis 1.
/// Radial and axisymmetric grids start at r = 0 so the axis is a grid line.
class Grid {
public:
    Grid() = default;
    Grid(GridKind kind, int n0, int n1, double d0, double d1, double o0, double o1);

    static Grid line(int n, double x0, double x1);
    static Grid radial(int n, double r_max);
    static Grid cartesian(int n0, int n1, double x0, double x1, double y0, double y1);
    static Grid axisym(int nr, int nz, double r_max, double z0, double z1);

    GridKind kind() const { return kind_; }
    int n0() const { return n_[0]; }
    int n1() const { return n_[1]; }
    int count(int axis) const { return n_[axis]; }
    double spacing(int axis) const { return d_[axis]; }
    double origin(int axis) const { return o_[axis]; }
    double max_spacing() const;
    /// Area (2D) or length (1D) of one cell in the coordinate plane.
    double cell_measure() const;
    int dimension() const { return (kind_ == GridKind::line || kind_ == GridKind::radial) ? 1 : 2; }
    bool has_axis() const { return kind_ == GridKind::radial || kind_ == GridKind::axisym_rz; }

    std::size_t size() const { return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_[1] + j; }
    std::size_t index(NodeIndex n) const { return index(n.i, n.j); }
    NodeIndex node(std::size_t k) const { return {static_cast<int>(k / n_[1]), static_cast<int>(k % n_[1])}; }
    bool contains(int i, int j) const { return i >= 0 && i < n_[0] && j >= 0 && j < n_[1]; }

    double coord(int axis, int idx) const { return o_[axis] + idx * d_[axis]; }
    Vec2 position(NodeIndex n) const { return {coord(0, n.i), dimension() == 2 ? coord(1, n.j) : 0.0}; }

    friend bool operator==(const Grid& a, const Grid& b);

private:
    GridKind kind_ = GridKind::cartesian2d;
    std::array<int, 2> n_{1, 1};
    std::array<double, 2> d_{1.0, 1.0};
    std::array<double, 2> o_{0.0, 0.0};
};

/// Node ids of the 3x3 patch around a node, slot (a, b) with a, b in {-1, 0, 1}.
/// Mirror images across the symmetry axis are resolved to their real node.
/// Missing neighbours (1D grids, grid edge) are -1.
struct Patch {
    std::array<long, 9> ids{};
    long at(int a, int b) const { return ids[static_cast<std::size_t>((a + 1) * 3 + (b + 1))]; }
};

/// Builds the patch; throws StencilError if a neighbour needed by a second-order
/// central stencil is missing or flagged outside.
Patch stencil_patch(const Grid& grid, const std::vector<NodeClass>& mask, NodeIndex node, bool need_mixed);

/// Finite-difference weights of the five first/second derivative operators on a patch.
struct PatchWeights {
    // d0, d1, d00, d11, d01 over the 9 patch slots.
    std::array<std::array<double, 9>, 5> w{};
};
PatchWeights patch_weights(const Grid& grid);

/// Derivatives at a node evaluated from a patch.
struct LocalDerivatives {
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
};
LocalDerivatives local_derivatives(const Grid& grid, const Patch& patch, const std::vector<double>& values);

/// Values on a grid together with the interior/boundary/outside classification.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(Grid grid, std::vector<double> values, std::vector<NodeClass> mask);
    /// Mask everything interior except an outermost collar flagged boundary.
    static ScalarField from_function(const Grid& grid, const std::function<double(const Vec2&)>& fn);
    static ScalarField from_function(const Grid& grid, std::vector<NodeClass> mask,
                                     const std::function<double(const Vec2&)>& fn);

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<NodeClass>& mask() const { return mask_; }
    double value(NodeIndex n) const { return values_[grid_.index(n)]; }
    NodeClass node_class(NodeIndex n) const { return mask_[grid_.index(n)]; }
    bool is_interior(NodeIndex n) const { return node_class(n) == NodeClass::interior; }

    /// Copy with replaced values (same grid and mask).
    ScalarField with_values(std::vector<double> values) const;
    std::vector<NodeIndex> interior_nodes() const;
    std::size_t count(NodeClass c) const;

private:
    Grid grid_;
    std::vector<double> values_;
    std::vector<NodeClass> mask_;
};

/// Second-order central gradient. On axis grids the radial component at r = 0 is 0.
Vec2 gradient(const ScalarField& field, NodeIndex node);
/// Second-order central Hessian of the in-plane coordinates; symmetric by construction.
Mat2 hessian(const ScalarField& field, NodeIndex node);

/// Per-node membership flags (1 = member).
using NodeSet = std::vector<char>;

/// Members of `set` with an in-plane neighbour outside it. Neighbours across the
/// symmetry axis are mirrors of members, so the axis itself is never a boundary.
NodeSet relative_boundary(const Grid& grid, const NodeSet& set);
std::vector<NodeIndex> members(const Grid& grid, const NodeSet& set);

/// Largest difference quotient of `q` between a node of `boundary` and a neighbour in `set`.
double lipschitz_near(const Grid& grid, const std::vector<double>& q, const NodeSet& set, const NodeSet& boundary);

/// CSV with header `axis0,axis1,value,mask`, one row per node in index order.
void write_csv(const ScalarField& field, std::ostream& out);
ScalarField read_csv(std::istream& in, GridKind kind);
void write_csv_file(const ScalarField& field, const std::string& path);
ScalarField read_csv_file(const std::string& path, GridKind kind);

} // namespace mcf
