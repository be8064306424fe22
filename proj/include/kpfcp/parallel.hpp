#ifndef KPFCP_PARALLEL_HPP
#define KPFCP_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace kpfcp {

struct ProcessOptions {
  unsigned threads = 1;  // 0: hardware concurrency
};

inline unsigned ResolveThreads(unsigned requested, Eigen::Index work_items) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::clamp<Eigen::Index>(n, 1, std::max<Eigen::Index>(1, work_items)));
}

/// Runs fn(bin, worker) for every bin, bins split into contiguous ranges per
/// worker. Bins must be independent. If several workers fail, the exception of
/// the lowest bin range is rethrown.
template <class Fn>
unsigned ParallelForBins(Eigen::Index bins, unsigned threads, Fn&& fn) {
  const unsigned workers = ResolveThreads(threads, bins);
  if (workers == 1) {
    for (Eigen::Index f = 0; f < bins; ++f) fn(f, 0u);
    return 1;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const Eigen::Index begin = bins * w / workers;
    const Eigen::Index end = bins * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        for (Eigen::Index f = begin; f < end; ++f) fn(f, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return workers;
}

}  // namespace kpfcp

#endif  // KPFCP_PARALLEL_HPP
