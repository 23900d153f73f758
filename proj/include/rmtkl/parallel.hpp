#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace rmtkl {

/// Calls body(i) for every i in [0, count) on up to `workers` threads.
/// Indices are handed out in increasing order. body must not throw; callers
/// capture per-index errors themselves. Once `stop` becomes true no further
/// indices are started.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body, const std::atomic<bool>* stop = nullptr) {
  const unsigned threads = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      if (stop != nullptr && stop->load(std::memory_order_relaxed)) {
        return;
      }
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      if (stop != nullptr && stop->load(std::memory_order_relaxed)) {
        return;
      }
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) {
        return;
      }
      body(i);
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back(worker);
  }
}

inline unsigned default_workers() noexcept {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1U : hc;
}

}  // namespace rmtkl
