#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mcf/mesh.hpp"

namespace mcf {

/// Principal curvatures at one node, sorted ascending, with h = their sum.
struct CurvatureDiagnostics {
    std::vector<double> kappa;
    double h = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN(); // kappa_1 / h
    double grad_norm = 0.0;
    bool regular = false;

    double kappa_first() const { return kappa.empty() ? 0.0 : kappa.front(); }
    double kappa_last() const { return kappa.empty() ? 0.0 : kappa.back(); }
    /// kappa_last / h
    double ratio_last() const { return h > 0.0 ? kappa_last() / h : std::numeric_limits<double>::quiet_NaN(); }
};

/// Eigenvalues (ascending) of a real 2x2 matrix known to have real spectrum.
inline std::array<double, 2> eigenvalues_2x2(const Mat2& m) {
    const double half_tr = 0.5 * (m(0, 0) + m(1, 1));
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::sqrt(std::max(half_tr * half_tr - det, 0.0));
    return {half_tr - disc, half_tr + disc};
}

} // namespace mcf
