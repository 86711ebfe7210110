#include "fipp/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fipp::par {

int worker_count() {
    int hw = 1;
#ifdef _OPENMP
    hw = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("FIPP_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) hw = std::min(hw, cap);
    }
    return std::max(1, hw);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
#ifdef _OPENMP
    if (n > 1 && worker_count() > 1) {
        const int nt = worker_count();
        std::exception_ptr first_error;
#pragma omp parallel for schedule(static) num_threads(nt)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
#pragma omp critical(fipp_parallel_for_error)
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);
        return;
    }
#endif
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

MeanVar mean_var(const std::vector<double>& x) {
    MeanVar out;
    const std::size_t n = x.size();
    if (n == 0) return out;
    out.mean = pairwise_sum(x) / static_cast<double>(n);
    if (n == 1) return out;
    std::vector<double> dev2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - out.mean;
        dev2[i] = d * d;
    }
    out.var = pairwise_sum(dev2) / static_cast<double>(n - 1);
    return out;
}

} // namespace fipp::par
