#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace attribforge {

// Block-partitioned parallel map. Callers write into preallocated,
// index-addressed slots and derive any per-task randomness from the task
// index, so results are identical for every thread count.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t t = std::min(threads == 0 ? std::size_t{1} : threads, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + t - 1) / t;
  std::vector<std::exception_ptr> errors(t);
  std::vector<std::thread> workers;
  workers.reserve(t);
  for (std::size_t w = 0; w < t; ++w) {
    workers.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace attribforge
