#pragma once

// Replicate loops. Results are stored by replicate index and reduced in index
// order afterwards, so the output does not depend on the thread count.

#include <omp.h>

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

namespace hbbm::detail {

inline int thread_count(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

template <class T, class F>
std::vector<T> map_replicates(std::size_t count, int threads, F&& f) {
  std::vector<T> out(count);
  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(threads))
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(hbbm_replicate_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// Same contract, one thread; kept as the reference in tests.
template <class T, class F>
std::vector<T> map_replicates_serial(std::size_t count, F&& f) {
  std::vector<T> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
  return out;
}

}  // namespace hbbm::detail
