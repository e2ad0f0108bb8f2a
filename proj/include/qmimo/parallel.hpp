#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qmimo {

// Runs fn(0..n-1) across up to max_workers threads (0 selects the hardware
// concurrency). Jobs are claimed from an atomic counter, so completion order
// is arbitrary; callers must write results into per-index slots to stay
// deterministic. Degrades to a plain loop on single-core hosts. The first
// exception thrown by any job is rethrown after all workers join.
inline void parallel_for(int n, const std::function<void(int)>& fn,
                         int max_workers = 0) {
  if (n <= 0) return;
  int workers = max_workers > 0
                    ? max_workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n) workers = n;
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace qmimo
