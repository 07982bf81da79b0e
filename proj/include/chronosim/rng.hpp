#pragma once

#include <cstdint>

namespace chronosim {

/// Deterministic 64-bit generator: xoshiro256++ seeded through splitmix64.
///
/// The algorithm is pinned so traces reproduce bit-for-bit across runs and
/// across ports of this code; do not swap in std::mt19937_64 or the
/// platform's distributions. Gaussian draws use the Box-Muller cosine
/// branch and consume exactly two raw outputs each.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double();

    /// Uniform in (0, 1]; safe as a log() argument.
    double next_open_double();

    /// Standard normal via z = sqrt(-2 ln u1) * cos(2 pi u2).
    double next_gaussian();

    /// True with probability p.
    bool next_coin(double p) { return next_double() < p; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    static std::uint64_t splitmix64(std::uint64_t& state);

private:
    std::uint64_t s_[4];
};

} // namespace chronosim
