#pragma once

#include <cstddef>
#include <functional>

namespace freqprint {

/// Worker count: hardware concurrency, capped by FREQPRINT_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is processed exactly once; results
/// must be written to per-index slots so output order never depends on
/// scheduling. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace freqprint
