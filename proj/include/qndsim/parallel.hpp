#pragma once

#include <cstddef>
#include <functional>

namespace qnd {

// Thread count to use: `requested` if positive, else QNDSIM_THREADS, else the
// hardware concurrency (at least 1).
int resolve_threads(int requested);

// Runs body(begin, end, worker) on contiguous, statically assigned chunks of
// [0, n). The split depends only on n and the thread count. The first
// exception thrown by a worker is rethrown after all workers join.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& body);

}  // namespace qnd
