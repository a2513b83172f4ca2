#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace domainrank {

// Chunked parallel map over [0,n). Each worker owns a disjoint index range and
// writes only to its own slots, so results never depend on the schedule.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& body, unsigned n_threads = 0) {
  if (n == 0) return;
  unsigned hw = n_threads ? n_threads : std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::size_t min_chunk = 1024;
  std::size_t chunks = std::min<std::size_t>(hw, (n + min_chunk - 1) / min_chunk);
  if (chunks <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t per = (n + chunks - 1) / chunks;
  std::vector<std::thread> workers;
  workers.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * per;
    const std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace domainrank
