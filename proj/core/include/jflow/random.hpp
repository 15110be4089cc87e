#pragma once

#include <cstdint>

#include "jflow/scalar_field.hpp"

namespace jflow {

// Deterministic PRNG with a fixed cross-platform stream (std distributions
// are implementation-defined; reproducibility of test corpora needs stable bits).
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi].
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

// Sum of `n_modes` cosine modes with integer wavevectors of sup-norm in
// [1, band] and random phases; total amplitude approximately `amplitude`.
// Band-limited by construction: keep band < resolution/4 so that products
// of two such fields stay alias-free.
ScalarField random_band_limited(const Grid& grid, int band, int n_modes, double amplitude,
                                std::uint64_t seed);

} // namespace jflow
