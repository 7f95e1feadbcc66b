#pragma once
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace ganlab {

// Index-parallel map: runs fn(i) for i in [0, count) on `threads` workers.
// Tasks own disjoint state (each derives its RNG stream from its index), so
// results are identical for every thread count.
inline void parallel_for(long count, int threads,
                         const std::function<void(long)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> crew;
  int n = std::min<long>(threads, count);
  crew.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) crew.emplace_back(worker);
  for (auto& th : crew) th.join();
}

}  // namespace ganlab
