#pragma once

#include <atomic>
#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clinfom {

// Runs body(0..n-1) with OpenMP when jobs != 1, serially otherwise.
// jobs == 0 means the OpenMP default thread count. Bodies must write only to
// their own index's slot so parallel results are bit-identical to serial.
// The first exception thrown by any body is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, int jobs, const Body& body) {
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  if (jobs > 1) omp_set_num_threads(jobs);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      if (!failed.exchange(true)) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

inline int hardware_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace clinfom
