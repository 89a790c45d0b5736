#pragma once

#include <cstddef>
#include <functional>

namespace fblab {

// Worker count: hardware concurrency, capped by FBLAB_THREADS when set.
unsigned thread_count();

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker, so
// results are independent of the thread count as long as bodies write disjoint data.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fblab
