#pragma once

#include <cstdint>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace scarcat::detail {

// Number of partial sums used by chunked_sum. Fixed so that results do not
// depend on the thread count.
inline constexpr std::int64_t reduction_chunks = 64;

// Sums f(i) for i in [0, n). Partial sums are taken over a fixed chunking and
// combined in order, so the result is bitwise reproducible for any thread count.
template <typename T, typename F>
T chunked_sum(std::int64_t n, F &&f) {
    const std::int64_t chunks = n < reduction_chunks ? 1 : reduction_chunks;
    std::vector<T> partial(static_cast<std::size_t>(chunks), T{});
#pragma omp parallel for schedule(static) if (n > 4096)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t lo = n * c / chunks;
        const std::int64_t hi = n * (c + 1) / chunks;
        T acc{};
        for (std::int64_t i = lo; i < hi; ++i) acc += f(i);
        partial[static_cast<std::size_t>(c)] = acc;
    }
    T total{};
    for (const auto &p : partial) total += p;
    return total;
}

inline void set_thread_count(int threads) {
#if defined(_OPENMP)
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

} // namespace scarcat::detail
