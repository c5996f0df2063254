#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace roaforge {

// Fixed-size block partition of [0, count). Block boundaries depend only on
// `block`, never on the worker count, so per-block reductions combined in
// block order give bit-identical results for any number of threads.
inline std::size_t block_count(std::size_t count, std::size_t block) {
  return count == 0 ? 0 : (count + block - 1) / block;
}

// Runs fn(block_index, begin, end) for every block, distributing blocks over
// up to `threads` workers.
inline void parallel_blocks(std::size_t count, std::size_t block, int threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t nblocks = block_count(count, block);
  if (nblocks == 0) return;
  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block;
    const std::size_t end = std::min(count, begin + block);
    fn(b, begin, end);
  };
  if (threads <= 1 || nblocks == 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run_block(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  const int workers = static_cast<int>(std::min<std::size_t>(threads, nblocks));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        run_block(b);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace roaforge
