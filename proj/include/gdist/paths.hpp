#pragma once

#include <cstdint>
#include <vector>

#include "gdist/errors.hpp"
#include "gdist/pairwise.hpp"
#include "gdist/rng.hpp"

namespace gdist {

//! Uniform time grid on [0, horizon] with `steps` intervals.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    double dt() const { return horizon / steps; }
    double t(int k) const { return horizon * k / steps; }
    //! Interval index containing time t (clamped).
    int interval(double t_) const {
        const int k = static_cast<int>(t_ / dt());
        return k < 0 ? 0 : (k >= steps ? steps - 1 : k);
    }
};

//! Simulated n-dimensional Brownian paths on a uniform grid. Increments come
//! from a counter-based stream, so regeneration with the same seed is
//! bit-identical regardless of thread count or generation order.
//!
//! Storage is step-major: for a fixed step, paths are contiguous.
class PathEnsemble {
  public:
    PathEnsemble(long n_paths, int n_steps, int dim, double horizon,
                 std::uint64_t seed, std::vector<double> increments)
        : n_paths_(n_paths),
          n_steps_(n_steps),
          dim_(dim),
          horizon_(horizon),
          seed_(seed),
          increments_(std::move(increments)) {
        build_levels();
    }

    long n_paths() const { return n_paths_; }
    int n_steps() const { return n_steps_; }
    int dim() const { return dim_; }
    double horizon() const { return horizon_; }
    std::uint64_t seed() const { return seed_; }
    TimeGrid grid() const { return {horizon_, n_steps_}; }
    double dt() const { return horizon_ / n_steps_; }

    //! ΔB for (path, step, coordinate).
    double increment(long path, int step, int d) const {
        return increments_[(static_cast<std::size_t>(step) * n_paths_ + path) * dim_ + d];
    }
    //! B at grid node `node` (0..n_steps); node 0 is identically zero.
    double level(long path, int node, int d) const {
        return levels_[(static_cast<std::size_t>(node) * n_paths_ + path) * dim_ + d];
    }

    //! Mirror ensemble with negated increments (exact in floating point).
    PathEnsemble antithetic() const {
        std::vector<double> neg(increments_.size());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -increments_[i];
        return PathEnsemble(n_paths_, n_steps_, dim_, horizon_, seed_, std::move(neg));
    }

  private:
    void build_levels() {
        const std::size_t stride = static_cast<std::size_t>(n_paths_) * dim_;
        levels_.assign(stride * (n_steps_ + 1), 0.0);
        for (int k = 0; k < n_steps_; ++k) {
            const double* inc = increments_.data() + stride * k;
            const double* prev = levels_.data() + stride * k;
            double* next = levels_.data() + stride * (k + 1);
            parallel_for_blocks(stride, [&](std::size_t a, std::size_t b) {
                for (std::size_t i = a; i < b; ++i) next[i] = prev[i] + inc[i];
            });
        }
    }

    long n_paths_;
    int n_steps_, dim_;
    double horizon_;
    std::uint64_t seed_;
    std::vector<double> increments_;
    std::vector<double> levels_;
};

//! Default cap on the simulated-path storage (increments + levels).
inline constexpr std::size_t kDefaultPathMemoryCap = std::size_t(3) << 30;  // 3 GiB

inline PathEnsemble simulate_paths(long n_paths, int n_steps, int dim, double horizon,
                                   std::uint64_t seed,
                                   std::size_t memory_cap = kDefaultPathMemoryCap) {
    if (n_paths < 1 || n_steps < 1 || dim < 1 || !(horizon > 0.0))
        throw InvalidArgument("simulate_paths: counts must be >= 1 and T > 0");
    const std::size_t cells =
        static_cast<std::size_t>(n_paths) * n_steps * dim;
    const std::size_t bytes = (2 * cells + static_cast<std::size_t>(n_paths) * dim) * 8;
    if (bytes > memory_cap)
        throw ResourceLimit("simulate_paths: " + std::to_string(bytes) +
                            " bytes exceeds the configured cap");
    const double sqrt_dt = std::sqrt(horizon / n_steps);
    std::vector<double> inc(cells);
    const CounterRng rng{seed};
    const std::size_t per_step = static_cast<std::size_t>(n_paths) * dim;
    parallel_for_blocks(cells, [&](std::size_t a, std::size_t b) {
        for (std::size_t i = a; i < b; ++i) {
            const std::size_t step = i / per_step;
            const std::size_t rem = i % per_step;
            const std::size_t path = rem / dim;
            const std::size_t d = rem % dim;
            inc[i] = sqrt_dt * rng.normal(path, step, d);
        }
    });
    return PathEnsemble(n_paths, n_steps, dim, horizon, seed, std::move(inc));
}

}  // namespace gdist
