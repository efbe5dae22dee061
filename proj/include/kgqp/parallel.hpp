#pragma once

#include <cstddef>
#include <functional>

namespace kgqp {

// Worker count for parallel sections; 0 means "all logical cores".
void set_jobs(unsigned jobs);
unsigned jobs();

// Runs fn(i) for i in [begin, end) split into contiguous chunks, one per
// worker. fn must only touch state owned by index i.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace kgqp
