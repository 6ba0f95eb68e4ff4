#include "mcf/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mcf/errors.hpp"

namespace mcf {

std::string to_string(GridKind kind) {
    switch (kind) {
    case GridKind::line: return "line";
    case GridKind::radial: return "radial";
    case GridKind::cartesian2d: return "cartesian2d";
    case GridKind::axisym_rz: return "axisym_rz";
    }
    return "?";
}

GridKind grid_kind_from_string(const std::string& name) {
    if (name == "line") return GridKind::line;
    if (name == "radial") return GridKind::radial;
    if (name == "cartesian2d") return GridKind::cartesian2d;
    if (name == "axisym_rz") return GridKind::axisym_rz;
    throw SpecificationError("unknown grid kind '" + name + "'");
}

std::string to_string(NodeClass c) {
    switch (c) {
    case NodeClass::interior: return "interior";
    case NodeClass::boundary: return "boundary";
    case NodeClass::outside: return "outside";
    }
    return "?";
}

NodeClass node_class_from_string(const std::string& name) {
    if (name == "interior") return NodeClass::interior;
    if (name == "boundary") return NodeClass::boundary;
    if (name == "outside") return NodeClass::outside;
    throw SpecificationError("unknown node class '" + name + "'");
}

Grid::Grid(GridKind kind, int n0, int n1, double d0, double d1, double o0, double o1)
    : kind_(kind), n_{n0, n1}, d_{d0, d1}, o_{o0, o1} {
    if (n0 < 1 || n1 < 1) throw ParameterError("grid node counts must be positive");
    if (!(d0 > 0.0) || !(d1 > 0.0)) throw ParameterError("grid spacings must be strictly positive");
    if (dimension() == 1 && n1 != 1) throw ParameterError("one-dimensional grids have a single node along axis 1");
    if (has_axis() && o0 != 0.0) throw ParameterError("axis grids must include r = 0 as the first grid line");
}

Grid Grid::line(int n, double x0, double x1) {
    if (n < 2 || !(x1 > x0)) throw ParameterError("line grid needs n >= 2 and x1 > x0");
    return Grid(GridKind::line, n, 1, (x1 - x0) / (n - 1), 1.0, x0, 0.0);
}

Grid Grid::radial(int n, double r_max) {
    if (n < 2 || !(r_max > 0.0)) throw ParameterError("radial grid needs n >= 2 and r_max > 0");
    return Grid(GridKind::radial, n, 1, r_max / (n - 1), 1.0, 0.0, 0.0);
}

Grid Grid::cartesian(int n0, int n1, double x0, double x1, double y0, double y1) {
    if (n0 < 2 || n1 < 2 || !(x1 > x0) || !(y1 > y0)) throw ParameterError("degenerate cartesian grid");
    return Grid(GridKind::cartesian2d, n0, n1, (x1 - x0) / (n0 - 1), (y1 - y0) / (n1 - 1), x0, y0);
}

Grid Grid::axisym(int nr, int nz, double r_max, double z0, double z1) {
    if (nr < 2 || nz < 2 || !(r_max > 0.0) || !(z1 > z0)) throw ParameterError("degenerate axisymmetric grid");
    return Grid(GridKind::axisym_rz, nr, nz, r_max / (nr - 1), (z1 - z0) / (nz - 1), 0.0, z0);
}

double Grid::max_spacing() const { return dimension() == 1 ? d_[0] : std::max(d_[0], d_[1]); }

double Grid::cell_measure() const { return dimension() == 1 ? d_[0] : d_[0] * d_[1]; }

bool operator==(const Grid& a, const Grid& b) {
    return a.kind_ == b.kind_ && a.n_ == b.n_ && a.d_ == b.d_ && a.o_ == b.o_;
}

Patch stencil_patch(const Grid& grid, const std::vector<NodeClass>& mask, NodeIndex node, bool need_mixed) {
    Patch p;
    p.ids.fill(-1);
    const bool two_d = grid.dimension() == 2;
    for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
            if (!two_d && b != 0) continue;
            const bool axis_slot = (a == 0 || b == 0);
            if (!axis_slot && !need_mixed) continue;
            int i = node.i + a;
            const int j = node.j + b;
            if (i < 0 && grid.has_axis()) i = -i; // even reflection across r = 0
            if (!grid.contains(i, j)) {
                throw StencilError("stencil leaves the grid at node (" + std::to_string(node.i) + ", " +
                                       std::to_string(node.j) + ")",
                                   node.i, node.j);
            }
            const std::size_t k = grid.index(i, j);
            if (mask[k] == NodeClass::outside) {
                throw StencilError("stencil touches an outside node at (" + std::to_string(i) + ", " +
                                       std::to_string(j) + ") from node (" + std::to_string(node.i) + ", " +
                                       std::to_string(node.j) + ")",
                                   node.i, node.j);
            }
            p.ids[static_cast<std::size_t>((a + 1) * 3 + (b + 1))] = static_cast<long>(k);
        }
    }
    return p;
}

PatchWeights patch_weights(const Grid& grid) {
    PatchWeights pw;
    auto slot = [](int a, int b) { return static_cast<std::size_t>((a + 1) * 3 + (b + 1)); };
    const double h0 = grid.spacing(0);
    const double h1 = grid.spacing(1);
    pw.w[0][slot(1, 0)] = 0.5 / h0;
    pw.w[0][slot(-1, 0)] = -0.5 / h0;
    pw.w[2][slot(1, 0)] = 1.0 / (h0 * h0);
    pw.w[2][slot(-1, 0)] = 1.0 / (h0 * h0);
    pw.w[2][slot(0, 0)] = -2.0 / (h0 * h0);
    if (grid.dimension() == 2) {
        pw.w[1][slot(0, 1)] = 0.5 / h1;
        pw.w[1][slot(0, -1)] = -0.5 / h1;
        pw.w[3][slot(0, 1)] = 1.0 / (h1 * h1);
        pw.w[3][slot(0, -1)] = 1.0 / (h1 * h1);
        pw.w[3][slot(0, 0)] = -2.0 / (h1 * h1);
        const double c = 0.25 / (h0 * h1);
        pw.w[4][slot(1, 1)] = c;
        pw.w[4][slot(-1, -1)] = c;
        pw.w[4][slot(1, -1)] = -c;
        pw.w[4][slot(-1, 1)] = -c;
    }
    return pw;
}

LocalDerivatives local_derivatives(const Grid& grid, const Patch& patch, const std::vector<double>& values) {
    const PatchWeights pw = patch_weights(grid);
    std::array<double, 5> d{};
    for (std::size_t op = 0; op < 5; ++op) {
        double s = 0.0;
        for (std::size_t k = 0; k < 9; ++k) {
            const double w = pw.w[op][k];
            if (w != 0.0 && patch.ids[k] >= 0) s += w * values[static_cast<std::size_t>(patch.ids[k])];
        }
        d[op] = s;
    }
    LocalDerivatives out;
    out.grad = Vec2(d[0], d[1]);
    out.hess << d[2], d[4], d[4], d[3];
    return out;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values, std::vector<NodeClass> mask)
    : grid_(std::move(grid)), values_(std::move(values)), mask_(std::move(mask)) {
    if (values_.size() != grid_.size() || mask_.size() != grid_.size()) {
        throw ParameterError("field storage does not match the grid size");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (mask_[k] != NodeClass::outside && !std::isfinite(values_[k])) {
            throw NumericError("non-finite field value at an interior or boundary node");
        }
    }
}

ScalarField ScalarField::from_function(const Grid& grid, const std::function<double(const Vec2&)>& fn) {
    std::vector<NodeClass> mask(grid.size(), NodeClass::interior);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const NodeIndex n = grid.node(k);
        bool collar = n.i == grid.n0() - 1 || (!grid.has_axis() && n.i == 0);
        if (grid.dimension() == 2) collar = collar || n.j == 0 || n.j == grid.n1() - 1;
        if (collar) mask[k] = NodeClass::boundary;
    }
    return from_function(grid, std::move(mask), fn);
}

ScalarField ScalarField::from_function(const Grid& grid, std::vector<NodeClass> mask,
                                       const std::function<double(const Vec2&)>& fn) {
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (mask[k] != NodeClass::outside) values[k] = fn(grid.position(grid.node(k)));
    }
    return ScalarField(grid, std::move(values), std::move(mask));
}

ScalarField ScalarField::with_values(std::vector<double> values) const {
    return ScalarField(grid_, std::move(values), mask_);
}

std::vector<NodeIndex> ScalarField::interior_nodes() const {
    std::vector<NodeIndex> out;
    for (std::size_t k = 0; k < mask_.size(); ++k) {
        if (mask_[k] == NodeClass::interior) out.push_back(grid_.node(k));
    }
    return out;
}

std::size_t ScalarField::count(NodeClass c) const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), c));
}

namespace {

void require_interior(const ScalarField& field, NodeIndex node) {
    if (!field.grid().contains(node.i, node.j) || !field.is_interior(node)) {
        throw StencilError("derivative requested at a non-interior node (" + std::to_string(node.i) + ", " +
                               std::to_string(node.j) + ")",
                           node.i, node.j);
    }
}

} // namespace

Vec2 gradient(const ScalarField& field, NodeIndex node) {
    require_interior(field, node);
    const Patch p = stencil_patch(field.grid(), field.mask(), node, false);
    Vec2 g = local_derivatives(field.grid(), p, field.values()).grad;
    if (field.grid().has_axis() && node.i == 0) g[0] = 0.0;
    return g;
}

Mat2 hessian(const ScalarField& field, NodeIndex node) {
    require_interior(field, node);
    const Patch p = stencil_patch(field.grid(), field.mask(), node, true);
    return local_derivatives(field.grid(), p, field.values()).hess;
}

NodeSet relative_boundary(const Grid& grid, const NodeSet& set) {
    NodeSet out(grid.size(), 0);
    const bool two_d = grid.dimension() == 2;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!set[k]) continue;
        const NodeIndex n = grid.node(k);
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int t = 0; t < (two_d ? 4 : 2); ++t) {
            int i = n.i + di[t];
            const int j = n.j + dj[t];
            if (i < 0 && grid.has_axis()) i = -i;
            if (!grid.contains(i, j) || !set[grid.index(i, j)]) {
                out[k] = 1;
                break;
            }
        }
    }
    return out;
}

std::vector<NodeIndex> members(const Grid& grid, const NodeSet& set) {
    std::vector<NodeIndex> out;
    for (std::size_t k = 0; k < set.size(); ++k) {
        if (set[k]) out.push_back(grid.node(k));
    }
    return out;
}

double lipschitz_near(const Grid& grid, const std::vector<double>& q, const NodeSet& set, const NodeSet& boundary) {
    double best = 0.0;
    const bool two_d = grid.dimension() == 2;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!boundary[k] || !std::isfinite(q[k])) continue;
        const NodeIndex n = grid.node(k);
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int t = 0; t < (two_d ? 4 : 2); ++t) {
            const int i = n.i + di[t];
            const int j = n.j + dj[t];
            if (!grid.contains(i, j)) continue;
            const std::size_t m = grid.index(i, j);
            if (!set[m] || !std::isfinite(q[m])) continue;
            const double h = grid.spacing(t < 2 ? 0 : 1);
            best = std::max(best, std::abs(q[k] - q[m]) / h);
        }
    }
    return best;
}

void write_csv(const ScalarField& field, std::ostream& out) {
    const Grid& g = field.grid();
    out << "axis0,axis1,value,mask\n";
    char buf[128];
    for (std::size_t k = 0; k < g.size(); ++k) {
        const NodeIndex n = g.node(k);
        const Vec2 x = g.position(n);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", x[0], x[1], field.values()[k]);
        out << buf << to_string(field.mask()[k]) << '\n';
    }
}

namespace {

double parse_real(const std::string& text, const std::string& row) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) throw ConfigError("malformed number in field CSV row: " + row);
    return v;
}

} // namespace

ScalarField read_csv(std::istream& in, GridKind kind) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("axis0,axis1,value,mask", 0) != 0) {
        throw ConfigError("field CSV must start with the header axis0,axis1,value,mask");
    }
    std::vector<double> a0, a1, vals;
    std::vector<NodeClass> mask;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string c0, c1, v, m;
        if (!std::getline(ss, c0, ',') || !std::getline(ss, c1, ',') || !std::getline(ss, v, ',') ||
            !std::getline(ss, m)) {
            throw ConfigError("malformed field CSV row: " + line);
        }
        if (!m.empty() && m.back() == '\r') m.pop_back();
        a0.push_back(parse_real(c0, line));
        a1.push_back(parse_real(c1, line));
        vals.push_back(parse_real(v, line));
        mask.push_back(node_class_from_string(m));
    }
    if (vals.empty()) throw ConfigError("field CSV has no rows");
    // Row-major order: axis1 varies fastest.
    std::size_t n1 = 1;
    while (n1 < a0.size() && a0[n1] == a0[0]) ++n1;
    if (vals.size() % n1 != 0) throw ConfigError("field CSV rows do not form a rectangular grid");
    const int n0 = static_cast<int>(vals.size() / n1);
    const double d0 = n0 > 1 ? a0[n1] - a0[0] : 1.0;
    const double d1 = n1 > 1 ? a1[1] - a1[0] : 1.0;
    Grid grid(kind, n0, static_cast<int>(n1), d0, d1, a0[0], a1[0]);
    for (std::size_t k = 0; k < vals.size(); ++k) {
        const Vec2 x = grid.position(grid.node(k));
        const double tol = 1e-9 * (1.0 + std::abs(x[0]) + std::abs(x[1]));
        if (std::abs(x[0] - a0[k]) > tol || (grid.dimension() == 2 && std::abs(x[1] - a1[k]) > tol)) {
            throw ConfigError("field CSV coordinates are not a uniform row-major grid");
        }
    }
    return ScalarField(grid, std::move(vals), std::move(mask));
}

void write_csv_file(const ScalarField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    write_csv(field, out);
}

ScalarField read_csv_file(const std::string& path, GridKind kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return read_csv(in, kind);
}

} // namespace mcf
