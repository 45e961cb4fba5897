#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evtrisk {

// Every parallel kernel in the library takes an ExecMode: Serial is the
// reference implementation, OpenMP the production one. Kernels write into
// preallocated per-index slots and aggregate serially afterwards, so both
// modes produce bit-identical results; the consistency tests rely on that.
enum class ExecMode { Serial, OpenMP };

template <class F>
void parallel_for(ExecMode mode, std::size_t n, F&& body) {
#ifdef _OPENMP
  if (mode == ExecMode::OpenMP) {
    // Bodies must not let exceptions escape (they record failures per slot).
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      body(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)mode;
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

inline void set_thread_cap(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace evtrisk
