#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace kt {

/// Number of worker threads. Reads KT_THREADS unless an override is set.
unsigned worker_count();

/// Force the worker count (0 clears the override).
void set_worker_count(unsigned n);

/// Split [0, n) into contiguous chunks and run body(begin, end) on each.
/// Chunk boundaries never influence numerical results: callers must keep
/// per-index work independent of the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Fixed-shape pairwise summation; the tree depends only on n.
double pairwise_sum(const double* x, std::size_t n);

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

}  // namespace kt
