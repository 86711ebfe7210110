#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace fipp::par {

// Worker cap: min(hardware, FIPP_THREADS if set).
int worker_count();

// Static-schedule parallel loop over [0, n). Falls back to serial when OpenMP
// is unavailable or n is small. Bodies must be independent per index.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Deterministic pairwise (cascade) summation; independent of thread count.
double pairwise_sum(const double* x, std::size_t n);
double pairwise_sum(const std::vector<double>& x);

struct MeanVar {
    double mean = 0.0;
    double var = 0.0; // unbiased sample variance
};
MeanVar mean_var(const std::vector<double>& x);

} // namespace fipp::par
