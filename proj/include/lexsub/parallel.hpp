#pragma once

#include <cstddef>
#include <functional>

namespace lexsub {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Callers write
// results into pre-sized slots so output never depends on scheduling.
// The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace lexsub
