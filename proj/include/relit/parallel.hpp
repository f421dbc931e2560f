// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace relit {

// Number of workers actually used for a request of n (0 means machine parallelism).
int resolve_threads(int n);

// Runs fn(i) for i in [begin, end), statically partitioned across up to
// `threads` workers. fn must write only to its own per-index outputs;
// results are then independent of the partitioning.
void parallel_for(int64_t begin, int64_t end, int threads,
                  const std::function<void(int64_t)> &fn);

}  // namespace relit
