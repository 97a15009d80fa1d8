#pragma once

#include <cstddef>
#include <functional>

namespace fshap {

// Worker count: FSHAP_THREADS when set (clamped to >= 1), otherwise the
// hardware concurrency.
int default_thread_count();

// Runs fn(i) for i in [0, count) across `threads` workers (0 = default).
// Static index striping, so a fixed count + thread-safe fn is deterministic
// regardless of the worker count. Exceptions propagate from the first
// failing index.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace fshap
