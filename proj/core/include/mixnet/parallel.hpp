#pragma once

#include <cstddef>
#include <functional>

namespace mixnet {

// Thread cap honored by parallel_for: MIXNET_THREADS if set (values < 1 mean
// 1), otherwise the hardware concurrency.
std::size_t parallel_threads();

// Runs fn(0) .. fn(n-1), partitioned across up to parallel_threads() workers.
// Calls made from inside a running parallel_for execute inline, so nested
// parallelism never oversubscribes. The first exception thrown by any fn is
// rethrown on the caller's thread after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mixnet
