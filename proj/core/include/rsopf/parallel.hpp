#pragma once

#include <cstddef>
#include <functional>

namespace rsopf {

/// Worker count: hardware concurrency capped by RADIAL_SOPF_THREADS.
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks processed by up to worker_count()
/// threads. `body(begin, end)` must only touch its own range.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace rsopf
