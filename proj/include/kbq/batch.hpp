#pragma once

// Parallel maps over independent per-dialog work. Results land in per-item
// slots and are reduced serially in item order, so the parallel kernels
// return bitwise the same values as their serial references.

#include <cstddef>
#include <span>
#include <vector>

namespace kbq {

/// KBQ_JOBS if set to a positive integer, else 1.
int default_jobs();

/// Calls fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

template <class Fn>
void serial_for(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

/// out[i] = fn(i), computed in parallel.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int jobs, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, jobs, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

template <class T, class Fn>
std::vector<T> serial_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  serial_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

/// sum_i scale * slots[i], added in slot order.
void reduce_into(std::span<const std::vector<double>> slots, double scale, std::span<double> out);

}  // namespace kbq
