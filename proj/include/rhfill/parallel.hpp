#pragma once

#include <cstddef>
#include <functional>

namespace rhfill {

/// Worker count: RHFILL_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
std::size_t thread_count();

/// Calls body(i) for every i in [0, n) across worker threads.  Iterations
/// must write to disjoint state; the first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rhfill
