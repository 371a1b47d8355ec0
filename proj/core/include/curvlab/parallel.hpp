#pragma once

#include <cstddef>
#include <functional>

namespace curvlab {

/// Number of worker threads; CURVLAB_THREADS overrides the default.
int thread_count();

/// Runs body(i) for i in [0, count). Iterations must be independent;
/// results are identical for any thread count.
void parallel_for(std::ptrdiff_t count, const std::function<void(std::ptrdiff_t)>& body);

}  // namespace curvlab
