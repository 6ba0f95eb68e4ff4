#pragma once

#include <cstddef>

namespace mcf {

/// Execution policy of the per-node kernels. `serial` is the reference path the
/// tests compare the OpenMP path against.
enum class Exec { serial, parallel };

/// Thread cap for parallel kernels: MCFLAB_THREADS if set and positive, else the OpenMP default.
int max_threads();

/// Calls fn(k) for k in [0, n). Each index writes only its own outputs, so both
/// paths produce identical results.
template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
    if (exec == Exec::serial) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (long k = 0; k < count; ++k) fn(static_cast<std::size_t>(k));
}

} // namespace mcf
