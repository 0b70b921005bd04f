#pragma once

#include <functional>

namespace countpo {

// Runs fn(index) for index in [0, count) on up to `threads` workers.  Blocks
// until done; rethrows the first worker exception.  Work items must not
// depend on execution order (every caller here draws from per-index RNG
// substreams, so schedules cannot change results).
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// COUNTPO_THREADS, else 1.
int default_threads();

}  // namespace countpo
