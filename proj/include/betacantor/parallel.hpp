#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace betacantor {

// Worker count used when callers pass 0: the hardware concurrency.
inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// out[i] = fn(i) for i in [0, n), evaluated by a pool of threads. Results
// are stored by index, so the output does not depend on scheduling. The
// first exception thrown by fn is rethrown after all workers stop.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn, unsigned threads = 0) {
  std::vector<T> out(n);
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace betacantor
