#pragma once

#include <functional>

namespace cascadeprune {

// 0 or negative means "use the hardware count"; the CASCADEPRUNE_THREADS
// environment variable is consulted by the CLI, not here.
int resolve_threads(int requested);

// Runs body(begin, end) over contiguous chunks of [0, n).  Results must not
// depend on the chunking: workers write to disjoint per-index slots and any
// reduction happens afterwards in index order, which keeps every caller
// deterministic for any thread count.
void parallel_for(int n, int threads, const std::function<void(int, int)>& body);

}  // namespace cascadeprune
