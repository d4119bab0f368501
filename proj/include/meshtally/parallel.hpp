#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace meshtally {

// Threads used by a kernel when the caller passes threads <= 0.
inline int default_thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline int resolve_threads(int threads) { return threads > 0 ? threads : default_thread_count(); }

} // namespace meshtally
