#pragma once

#include <cstdint>

#include "gdist/normal.hpp"

namespace gdist {

//! SplitMix64 finalizer; a bijective 64-bit mixer of counter-mode quality.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

//! Counter-based random stream: every draw is a pure function of
//! (seed, path, step, dim), so parallel generation in any order or thread
//! count is bit-identical.
struct CounterRng {
    std::uint64_t seed = 0;

    std::uint64_t bits(std::uint64_t path, std::uint64_t step, std::uint64_t dim) const {
        std::uint64_t h = mix64(seed);
        h = mix64(h ^ path);
        h = mix64(h ^ step);
        h = mix64(h ^ dim);
        return h;
    }

    //! Uniform draw strictly inside (0,1).
    double uniform(std::uint64_t path, std::uint64_t step, std::uint64_t dim) const {
        const std::uint64_t b = bits(path, step, dim);
        return static_cast<double>(b >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    //! Standard normal draw via the inverse CDF.
    double normal(std::uint64_t path, std::uint64_t step, std::uint64_t dim) const {
        return std_normal_quantile(uniform(path, step, dim));
    }
};

}  // namespace gdist
