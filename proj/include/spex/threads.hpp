#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace spex {

// Runs fn(i) for i in [0, n) across up to `threads` workers. Work items
// are claimed from a shared counter; callers that need determinism must
// write results keyed by i (reduction order is then fixed by the caller,
// not by scheduling).
inline void parallel_for_index(std::size_t n, int threads,
                               const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers =
      static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(threads)));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// Pairwise tree sum; deterministic for a fixed partial order regardless
// of how the partials were produced.
inline double tree_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  while (v.size() > 1) {
    std::size_t out = 0;
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) v[out++] = v[i] + v[i + 1];
    if (v.size() % 2 == 1) v[out++] = v.back();
    v.resize(out);
  }
  return v[0];
}

}  // namespace spex
