#pragma once

#include <cstddef>
#include <functional>

namespace afibkit {

// Worker count used by parallel_for. 0 means std::thread::hardware_concurrency().
void set_num_threads(unsigned n);
unsigned num_threads();

// Runs body(i) for every i in [begin, end) using contiguous static chunks.
// Each index is processed by exactly one thread, so any body whose result for
// index i depends only on i yields identical output for every thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace afibkit
