#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace gcir::parallel {

/// Worker count used by parallel_for. 0 means hardware concurrency. Results
/// never depend on this value.
void set_workers(std::size_t n);
std::size_t workers();

/// Reads GCIR_THREADS, if set, into set_workers.
void workers_from_env();

/// Calls body(begin, end) on disjoint contiguous blocks covering [0, n).
/// Exceptions from any block are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (tree) sum with a fixed split order; the result depends only on
/// the data, not on the worker count.
double pairwise_sum(std::span<const double> v);

}  // namespace gcir::parallel
