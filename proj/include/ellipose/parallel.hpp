#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ellipose {

// Worker count: ELLIPOSE_THREADS when set and positive, else the hardware
// concurrency.
inline unsigned WorkerCount() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ELLIPOSE_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) n = static_cast<unsigned>(cap);
    } catch (...) {
    }
  }
  return n;
}

// Runs body(i) for i in [0, n). Results must be written to per-index slots so
// the outcome never depends on scheduling. The first exception is rethrown.
template <typename Body>
void ParallelFor(size_t n, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<size_t>(WorkerCount(), n));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ellipose
