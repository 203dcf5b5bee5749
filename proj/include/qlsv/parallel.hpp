#ifndef QLSV_PARALLEL_HPP
#define QLSV_PARALLEL_HPP

#include <cstdlib>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qlsv {

/// Every parallel kernel has a serial twin used as the reference in tests
/// and benchmarks.  Parallel results are bitwise identical to serial ones:
/// work items are independent and reductions run as deterministic pairwise
/// sums after the parallel fill.
enum class ExecMode { Serial, Parallel };

/// Thread budget: min(omp_get_max_threads, QLSV_THREADS if set).
inline int thread_budget() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
    if (const char* cap = std::getenv("QLSV_THREADS")) {
        const int c = std::atoi(cap);
        if (c >= 1 && c < n) n = c;
    }
    return n;
#else
    return 1;
#endif
}

/// Run body(i) for i in [0, n).  Bodies must write only to per-index slots.
template <typename Body>
void parallel_for(int n, ExecMode mode, Body&& body) {
#ifdef _OPENMP
    if (mode == ExecMode::Parallel && thread_budget() > 1) {
#pragma omp parallel for num_threads(thread_budget()) schedule(static)
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
#else
    (void)mode;
#endif
    for (int i = 0; i < n; ++i) body(i);
}

}  // namespace qlsv

#endif
