#pragma once
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fgibbs {

/// Runs fn(i) for i in [0, n). Work is claimed in fixed-size blocks; each
/// item must write only its own output slot, which keeps results identical
/// for every worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn,
                         std::size_t block = 64) {
  if (workers < 1) workers = 1;
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw > 0) workers = static_cast<int>(std::min<std::size_t>(workers, hw * 4));
  if (workers == 1 || n <= block) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t start = next.fetch_add(block);
      if (start >= n) return;
      std::size_t end = std::min(n, start + block);
      for (std::size_t i = start; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> ts;
  for (int t = 1; t < workers; ++t) ts.emplace_back(work);
  work();
  for (auto& t : ts) t.join();
}

}  // namespace fgibbs
