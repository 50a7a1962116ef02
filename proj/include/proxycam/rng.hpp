#pragma once

#include <cstdint>

namespace proxycam {

/// splitmix64 counter stream; deterministic on every platform.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1).
    double next_double() {
        return (double(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    /// Uniform in [lo, hi].
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }
};

} // namespace proxycam
