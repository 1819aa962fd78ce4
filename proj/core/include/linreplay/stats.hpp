#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace linreplay {

struct MeanEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t count = 0;
};

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, which keeps parallel Monte Carlo runs bit-identical
/// regardless of thread count.
double pairwise_sum(std::span<const double> values);

/// Sample mean and standard error of the mean (n - 1 denominator).
MeanEstimate estimate_mean(std::span<const double> values);

unsigned default_thread_count();

/// Evaluates fn(i) for i in [0, n) and returns the results in index order.
/// Work is split into contiguous chunks; the first exception thrown by any
/// worker is rethrown on the calling thread.
template <class Fn>
std::vector<double> run_trials(std::size_t n, Fn&& fn, unsigned threads = 0) {
  std::vector<double> out(n);
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  workers.clear();  // joins
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace linreplay
