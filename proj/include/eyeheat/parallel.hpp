#pragma once

#include <cstddef>
#include <functional>

namespace eyeheat {

/// Worker count: EYEHEAT_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned thread_count();

/// Calls body(i) for i in [0, n) on up to thread_count() threads, in
/// contiguous chunks. body must only write to per-index state. The first
/// exception thrown by any worker is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace eyeheat
