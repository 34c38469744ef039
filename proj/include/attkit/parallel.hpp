#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace attkit {

// Runs fn(0..n-1) on up to `threads` workers. Callers own determinism by
// writing results into per-index slots; the first exception is rethrown.
inline void parallel_for(Eigen::Index n, int threads,
                         const std::function<void(Eigen::Index)>& fn) {
  threads = static_cast<int>(std::min<Eigen::Index>(threads, n));
  if (threads <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      try {
        for (Eigen::Index i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace attkit
