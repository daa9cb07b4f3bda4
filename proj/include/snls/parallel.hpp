#ifndef SNLS_PARALLEL_HPP
#define SNLS_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace snls {

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers, contiguous chunks.
// Work items must write only to their own output slot; given that, results
// are identical for every thread count. The first exception thrown by any
// worker is rethrown to the caller after all workers joined.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  if (n == 0) return;
  const std::size_t nt =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (nt == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        {
          std::lock_guard<std::mutex> lock(err_mu);
          if (first_error) return;  // stop early, someone already failed
        }
        fn(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t base = n / nt, extra = n % nt;
  std::size_t lo = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t len = base + (t < extra ? 1 : 0);
    pool.emplace_back(worker, lo, lo + len);
    lo += len;
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Compensated (Kahan) accumulator for order-stable reductions.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace snls

#endif  // SNLS_PARALLEL_HPP
