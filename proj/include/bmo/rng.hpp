#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace bmo::rng {

// Counter-based generator: every draw is a pure function of
// (seed, path, step, draw index), so path blocks can be produced in any
// order, or in parallel, with bit-identical results.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h + kGolden + v);
}

inline std::uint64_t key(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x6a09e667f3bcc909ull;
    for (std::uint64_t w : words) h = combine(h, w);
    return h;
}

// Map to (0, 1]; never returns 0, so log(u) is safe.
inline double uniform01(std::uint64_t h) {
    return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

// One standard normal per (seed, path, step) via Box-Muller.
inline double normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
    const double u1 = uniform01(key({seed, path, step, 0}));
    const double u2 = uniform01(key({seed, path, step, 1}));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Decorrelated stream for nested (inner) simulation at an outer (path, step).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t outer_path,
                                 std::uint64_t step, std::uint64_t branch) {
    return key({seed, 0x5eedu, outer_path, step, branch});
}

}  // namespace bmo::rng
