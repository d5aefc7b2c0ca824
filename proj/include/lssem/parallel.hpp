#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace lssem {

/// Hardware concurrency, capped by the LSSEM_WORKERS environment variable.
int worker_count();

/// Runs fn(i) for i in [0, count) on up to worker_count() threads. Each index
/// must write only to storage owned by that index.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, count, workers, w] {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lssem
