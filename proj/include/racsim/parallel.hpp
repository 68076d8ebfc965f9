#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace racsim::par {

/// Execution mode for the batch kernels. Serial is the reference path the
/// tests compare against; OpenMP fans the same per-index work across threads.
/// Every kernel writes result slot i from iteration i only, so the two modes
/// must produce bit-identical output.
enum class Exec { Serial, OpenMP };

inline Exec default_exec() {
#ifdef _OPENMP
    return Exec::OpenMP;
#else
    return Exec::Serial;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

template <class Fn>
void for_indexed(std::size_t n, Exec mode, Fn&& fn) {
#ifdef _OPENMP
    if (mode == Exec::OpenMP) {
        #pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) {
        fn(i);
    }
}

}  // namespace racsim::par
