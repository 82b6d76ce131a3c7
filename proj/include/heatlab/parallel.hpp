#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace heatlab {

/// Worker count: HEATLAB_THREADS if set and positive, else the hardware
/// concurrency, capped by `requested` when that is positive.
int thread_count(int requested = 0);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// first exception thrown by any worker is rethrown after all have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

/// Deterministic pairwise (tree) sum, independent of scheduling.
double pairwise_sum(std::span<const double> values);

}  // namespace heatlab
