#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qpd {

// Worker-pool handle passed down from the CLI. jobs == 1 forces serial
// execution; jobs == 0 means "use all hardware threads".
struct Parallelism {
    int jobs = 0;

    int resolved_jobs() const {
#ifdef _OPENMP
        if (jobs <= 0) return omp_get_max_threads();
        return jobs;
#else
        return 1;
#endif
    }

    static Parallelism serial() { return Parallelism{1}; }
};

// Runs body(i) for i in [0, n). Iterations must be independent; results must
// not depend on execution order so that any job count gives identical output.
inline void parallel_for(const Parallelism& par, std::int64_t n,
                         const std::function<void(std::int64_t)>& body) {
    const int jobs = par.resolved_jobs();
#ifdef _OPENMP
    if (jobs > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    (void)jobs;
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace qpd
