#pragma once

#include <cstddef>
#include <functional>

namespace mpmbr {

// Runs fn(0..n-1) across at most max_workers threads. Results must be
// written to preallocated slots by the caller so merge order stays
// deterministic regardless of completion order. If any invocation throws,
// the exception for the lowest index is rethrown after all workers finish.
void parallel_for(size_t n, int max_workers,
                  const std::function<void(size_t)>& fn);

}  // namespace mpmbr
