#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sagseg {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Worker count used when a call does not pass one explicitly. Resolution
/// order: set_default_threads(), then SAGSEG_THREADS, then hardware.
inline int default_threads() {
  const int set = detail::thread_setting().load();
  if (set > 0) return set;
  if (const char* env = std::getenv("SAGSEG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_default_threads(int n) { detail::thread_setting().store(std::max(0, n)); }

/**
 * Runs fn(i) for i in [0, count) on up to `threads` workers. Work is handed
 * out dynamically, so fn must only write state owned by index i. The first
 * exception thrown by any worker is rethrown on the calling thread.
 */
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, int threads = 0) {
  if (threads <= 0) threads = default_threads();
  const std::size_t workers = std::min<std::size_t>(std::size_t(threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
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

}  // namespace sagseg
