#pragma once

#include <cstddef>
#include <functional>

namespace cdptwin {

/// Worker count: hardware concurrency, capped by the CDP_TWIN_THREADS
/// environment variable when it holds a positive integer.
unsigned worker_count();

/// Runs fn(i) for i in [0, count). Each index is handled exactly once; callers
/// write results into per-index slots so the outcome does not depend on
/// scheduling. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace cdptwin
