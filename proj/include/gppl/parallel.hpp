#pragma once

// Minimal index-parallel loop. The worker count is bounded by the hardware
// and, when set, by the GPPL_THREADS environment variable. Each index is
// handled exactly once and results are written by index, so output never
// depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gppl {

inline std::size_t thread_budget() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GPPL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      // Ignore unparsable values and keep the hardware bound.
    }
  }
  return n;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs fn(i) for i in [0, count). Nested calls run serially on the calling worker. The first exception thrown by any worker is
// rethrown after all workers have stopped.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t max_workers = 0) {
  std::size_t workers = thread_budget();
  if (max_workers > 0) workers = std::min(workers, max_workers);
  workers = std::min(workers, count);
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    const bool was_inside = detail::in_parallel_region;
    detail::in_parallel_region = true;
    struct Reset {
      bool value;
      ~Reset() { detail::in_parallel_region = value; }
    } reset{was_inside};
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace gppl
