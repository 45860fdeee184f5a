#pragma once

#include <cstddef>
#include <functional>

namespace stopsum {

/// Worker count from STOPSUM_WORKERS, else the hardware concurrency (at least 1).
unsigned default_worker_count();

/// Runs body(begin, end) over [0, count) split into contiguous chunks, one per worker.
/// The first exception thrown by any chunk is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace stopsum
