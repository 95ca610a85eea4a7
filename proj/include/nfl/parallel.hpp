#pragma once

#include <functional>

namespace nfl {

// Resolves the worker count for per-cell batches: `requested` if positive,
// otherwise the NFL_BACKREACH_THREADS environment variable, otherwise the
// hardware concurrency.
int resolve_thread_count(int requested = 0);

// Runs body(0..n-1) on up to `threads` workers. Results must be written to
// disjoint slots so the merge order is index-deterministic. The first
// exception thrown by any worker is rethrown after all workers join.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace nfl
