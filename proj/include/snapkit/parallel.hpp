#pragma once

#include <functional>

namespace snapkit {

/// Runs fn(0), ..., fn(count-1) on up to `threads` workers (0 = hardware
/// concurrency). Work items are claimed dynamically; callers store results by
/// index so the merged output is independent of the thread count.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace snapkit
