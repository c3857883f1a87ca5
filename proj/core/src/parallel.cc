#include "cranet/parallel.h"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace cranet {
namespace {

std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> n{std::max<std::size_t>(1, std::thread::hardware_concurrency())};
  return n;
}

}  // namespace

void set_num_threads(std::size_t n) { thread_setting() = std::max<std::size_t>(1, n); }

std::size_t num_threads() { return thread_setting(); }

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
  if (end <= begin) return;
  const std::size_t total = end - begin;
  const std::size_t workers =
      std::min(num_threads(), std::max<std::size_t>(1, total / std::max<std::size_t>(1, min_chunk)));
  if (workers <= 1) {
    body(begin, end);
    return;
  }
  const std::size_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  body(begin, std::min(end, begin + chunk));
  for (auto& t : pool) t.join();
}

}  // namespace cranet
