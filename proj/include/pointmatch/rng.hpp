#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pointmatch/core.hpp"

namespace pointmatch {

// All randomness in the library flows through these helpers. The engine is
// std::mt19937_64, which the standard pins bit-for-bit, and the transforms
// below avoid std::*_distribution on purpose: those are implementation
// defined, and seeded outputs must reproduce across standard libraries.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// splitmix64 step; derives independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1), 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(Rng& rng, double lo, double hi) {
    return lo + uniform_unit(rng) * (hi - lo);
}

/// Index in [0, n). n must be >= 1.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    const auto k = static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(n));
    return k < n ? k : n - 1;
}

/// Pair of independent standard normals (Box-Muller).
inline Vec2 normal_pair(Rng& rng) {
    const double u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0,1], log is safe
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace pointmatch
