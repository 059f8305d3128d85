#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rigidflow {

/// Worker cap: RIGIDFLOW_THREADS if set, else hardware concurrency.
inline int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("RIGIDFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, hw);
  }
  return hw;
}

/// Chunked parallel loop over [0, n). The body must write only to disjoint
/// slots indexed by i, so results are identical for any worker count.
inline void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = static_cast<int>(static_cast<long>(n) * w / workers);
    const int hi = static_cast<int>(static_cast<long>(n) * (w + 1) / workers);
    pool.emplace_back([=, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rigidflow
