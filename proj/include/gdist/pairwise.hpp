#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <span>
#include <thread>
#include <vector>

namespace gdist {

//! Fixed-order pairwise (tree) summation. The reduction order depends only on
//! the element order, never on thread count, so results are reproducible.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_mean(std::span<const double> v) {
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

//! Sample variance (unbiased) with pairwise accumulation of squared deviations.
inline double pairwise_variance(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = pairwise_mean(v);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - m;
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(n - 1);
}

//! Standard error of the mean.
inline double standard_error(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    return std::sqrt(pairwise_variance(v) / static_cast<double>(v.size()));
}

//! Number of worker threads used by parallel_for_blocks. Set once from the CLI
//! (--threads / GDIST_THREADS); defaults to 1 so library use is serial.
inline std::atomic<int>& thread_count() {
    static std::atomic<int> n{1};
    return n;
}

//! Runs fn(block_begin, block_end) over [0,n) split into fixed-size blocks.
//! Block boundaries are independent of the thread count; each block must be a
//! pure function of its inputs so any worker assignment yields identical state.
template <class Fn>
void parallel_for_blocks(std::size_t n, Fn&& fn, std::size_t block = 8192) {
    if (n == 0) return;
    const std::size_t nblocks = (n + block - 1) / block;
    const int workers = std::max(1, thread_count().load());
    if (workers == 1 || nblocks == 1) {
        for (std::size_t b = 0; b < nblocks; ++b)
            fn(b * block, std::min(n, (b + 1) * block));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            fn(b * block, std::min(n, (b + 1) * block));
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min<std::size_t>(workers, nblocks);
    pool.reserve(spawn);
    for (int i = 1; i < spawn; ++i) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

}  // namespace gdist
