#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace hypalign {

/// Thread cap: HYPALIGN_THREADS if set, else hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("HYPALIGN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Runs f(i) for i in [0, n). Iterations must be independent and write only
/// to their own slots, so results do not depend on the thread count.
template <class F>
void parallel_for(int n, F&& f) {
  const int threads = std::min(max_threads(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        f(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace hypalign
