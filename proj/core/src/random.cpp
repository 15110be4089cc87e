#include "jflow/random.hpp"

#include <cmath>
#include <numbers>

#include "jflow/errors.hpp"

namespace jflow {

ScalarField random_band_limited(const Grid& grid, int band, int n_modes, double amplitude,
                                std::uint64_t seed) {
    if (band < 1 || band >= grid.resolution() / 2)
        throw ConfigError("random_band_limited: band must lie in [1, resolution/2)");
    if (n_modes < 1) throw ConfigError("random_band_limited: need at least one mode");

    SplitMix64 rng(seed);
    const int rank = grid.rank();
    const double two_pi = 2.0 * std::numbers::pi;

    struct Mode {
        double amp, phase;
        int k[4];
    };
    std::vector<Mode> modes(n_modes);
    for (auto& m : modes) {
        int k2 = 0;
        while (k2 == 0) {
            k2 = 0;
            for (int a = 0; a < 4; ++a) {
                m.k[a] = a < rank ? rng.uniform_int(-band, band) : 0;
                k2 += m.k[a] * m.k[a];
            }
        }
        m.phase = two_pi * rng.uniform();
        // 1/|k|^2 weighting keeps dd^c of the field on the same scale as the
        // field itself (up to pi^2), so positivity margins stay controllable.
        m.amp = amplitude * (0.5 + 0.5 * rng.uniform()) / (n_modes * k2);
    }

    ScalarField out(grid);
    const double h = grid.spacing();
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto ix = grid.unravel(i);
        double v = 0.0;
        for (const auto& m : modes) {
            double arg = m.phase;
            for (int a = 0; a < rank; ++a) arg += two_pi * m.k[a] * (ix[a] * h);
            v += m.amp * std::cos(arg);
        }
        out[i] = v;
    }
    return out;
}

} // namespace jflow
