#pragma once

#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ngspot::detail {

inline int resolve_jobs(int jobs) {
#ifdef _OPENMP
    return jobs > 0 ? jobs : omp_get_max_threads();
#else
    (void)jobs;
    return 1;
#endif
}

// OpenMP loop over [0, n) where every iteration writes only its own slot.
// Exceptions are captured per index and the lowest-index one is rethrown
// after the loop, so failures are deterministic regardless of scheduling.
template <class Body>
void parallel_index_for(std::int64_t n, int jobs, Body&& body) {
    if (n <= 0) return;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#ifdef _OPENMP
    const int threads = resolve_jobs(jobs);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

}  // namespace ngspot::detail
