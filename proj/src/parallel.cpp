#include "mcf/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mcf {

int max_threads() {
    int available = 1;
#ifdef _OPENMP
    available = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("MCFLAB_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) return cap < available ? cap : available;
        } catch (...) {
        }
    }
    return available;
}

} // namespace mcf
