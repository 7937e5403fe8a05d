#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace wptlab {

// Runs body(i) for i in [0, count) on `threads` OpenMP threads (0 = runtime
// default). Callers write results into per-index slots and reduce them in
// index order afterwards, so output never depends on the thread count. The
// first exception thrown by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(n_threads)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace wptlab
