#ifndef CTMIX_PARALLEL_HPP
#define CTMIX_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ctmix {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn over [0, n) split into contiguous blocks, one per worker. Callers
// must only write to per-index slots; results are then independent of the
// worker count.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || n < 2) {
    fn(0, n);
    return;
  }
  const std::size_t nblocks = std::min<std::size_t>(workers, n);
  const std::size_t chunk = (n + nblocks - 1) / nblocks;
  std::vector<std::thread> pool;
  pool.reserve(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t lo = b * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& t : pool) t.join();
}

} // namespace ctmix

#endif
