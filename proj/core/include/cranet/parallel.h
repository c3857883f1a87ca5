#pragma once

#include <cstddef>
#include <functional>

namespace cranet {

// Worker count used by parallel_for. Defaults to the hardware concurrency.
// Results never depend on this value: work is split by output element and
// each element is produced by exactly one worker.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Calls body(lo, hi) over disjoint chunks covering [begin, end).
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace cranet
