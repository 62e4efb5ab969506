#pragma once

#include <cstdint>
#include <functional>

namespace specklepair {

// Number of worker threads. Resolved once from SPECKLEPAIR_THREADS (if set)
// or hardware concurrency; can be overridden programmatically.
int worker_count();
void set_worker_count(int n);

// Runs body(block) for block = 0..n_blocks-1 on the worker pool. Blocks must
// be independent (disjoint outputs); any floating-point reduction across
// blocks must be combined by the caller in block order so results do not
// depend on the worker count. Exceptions are rethrown on the calling thread.
void parallel_for_blocks(std::int64_t n_blocks,
                         const std::function<void(std::int64_t)>& body);

} // namespace specklepair
