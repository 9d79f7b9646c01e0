#pragma once

#include <cstddef>
#include <functional>

namespace isoflow {

// Worker count: ISOFLOW_THREADS if set, else hardware concurrency.
int worker_count();

// Chunked parallel loop over [0, n).  The callable must write results into
// per-index slots only; reductions happen after the join so the outcome is
// independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace isoflow
