#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace modalenv::util {

// Pairwise (cascade) summation: associativity-fixed, so reductions give
// identical bits regardless of how the per-item values were produced.
inline double pairwise_sum(const std::vector<double>& values) {
  std::function<double(std::size_t, std::size_t)> sum = [&](std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= 8) {
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i) acc += values[i];
      return acc;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return sum(lo, mid) + sum(mid, hi);
  };
  return values.empty() ? 0.0 : sum(0, values.size());
}

// Runs fn(i) for i in [0, n) on a bounded pool. Results must be written to
// per-index slots; the schedule never affects output values.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned max_threads = 0) {
  unsigned hw = max_threads ? max_threads : std::thread::hardware_concurrency();
  if (hw <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  hw = static_cast<unsigned>(std::min<std::size_t>(hw, n));
  std::vector<std::thread> pool;
  pool.reserve(hw);
  for (unsigned t = 0; t < hw; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += hw) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace modalenv::util
