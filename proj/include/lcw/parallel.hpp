#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace lcw {

/// Worker cap from LCW_THREADS (default 1). Values below 1 are read as 1.
std::size_t thread_limit();

/// Runs `body(begin, end)` over contiguous blocks of [0, n).
///
/// Block boundaries depend only on `n` and the thread limit, and each block
/// owns its output slots, so results do not depend on scheduling.
template <typename Body>
void parallel_blocks(std::size_t n, Body&& body) {
  const std::size_t workers = std::min(thread_limit(), n);
  if (workers <= 1) {
    if (n) body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    std::size_t b = w * chunk;
    std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace lcw
