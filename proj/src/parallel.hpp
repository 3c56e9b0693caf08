#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace acfid::detail {

// Runs body(i) for i in [0, count). The exception of the lowest failing index is rethrown,
// so error reporting does not depend on scheduling.
template <typename Body>
void parallel_for(std::ptrdiff_t count, int workers, Body&& body) {
  std::exception_ptr first_error;
  std::ptrdiff_t first_index = count;
  std::mutex guard;
  const int threads = workers > 0 ? workers : 1;
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(guard);
      if (i < first_index) {
        first_index = i;
        first_error = std::current_exception();
      }
    }
  }
  (void)threads;
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace acfid::detail
