#pragma once

#include <cstddef>

#ifdef BCT_HAVE_OPENMP
#include <omp.h>
#endif

namespace bct {

// Kernels write to disjoint per-index slots, so serial and parallel runs
// produce bitwise-identical output; the serial path is the test reference.
enum class ExecPolicy { Serial, Parallel };

template <typename F>
void parallel_for(std::size_t n, ExecPolicy policy, F&& body) {
    if (policy == ExecPolicy::Serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef BCT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < static_cast<long long>(n); ++i) body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
    parallel_for(n, ExecPolicy::Parallel, body);
}

inline int max_threads() {
#ifdef BCT_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace bct
