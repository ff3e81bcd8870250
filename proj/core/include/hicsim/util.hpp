// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_UTIL_HPP
#define HICSIM_UTIL_HPP

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace hicsim {

// Run fn(chunk, begin, end) over n items split into n_chunks contiguous
// chunks, executed by up to `threads` workers. Chunk boundaries depend only
// on (n, n_chunks), never on the worker count, so deterministic reductions
// can sum per-chunk results in chunk order afterwards.
inline void parallel_chunks(int n, int n_chunks, int threads,
                            const std::function<void(int, int, int)>& fn) {
  if (n <= 0) return;
  if (n_chunks > n) n_chunks = n;
  if (n_chunks < 1) n_chunks = 1;
  const auto bounds = [&](int c, int* b, int* e) {
    const int base = n / n_chunks, rem = n % n_chunks;
    *b = c * base + (c < rem ? c : rem);
    *e = *b + base + (c < rem ? 1 : 0);
  };
  if (threads <= 1 || n_chunks == 1) {
    for (int c = 0; c < n_chunks; ++c) {
      int b, e;
      bounds(c, &b, &e);
      fn(c, b, e);
    }
    return;
  }
  std::atomic<int> next{0};
  const int workers = std::min(threads, n_chunks);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= n_chunks) return;
        int b, e;
        bounds(c, &b, &e);
        fn(c, b, e);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace hicsim

#endif  // HICSIM_UTIL_HPP
