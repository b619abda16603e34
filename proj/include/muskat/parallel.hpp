#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace muskat {

/// Upper bound on worker threads used by kernel loops. Zero or negative
/// leaves the OpenMP default in place.
inline void set_num_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

/// Runs body(i) for i in [0, n). Iterations must be independent; results
/// are identical for any thread count. The first exception thrown by any
/// iteration is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const long count = static_cast<long>(n);
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace muskat
