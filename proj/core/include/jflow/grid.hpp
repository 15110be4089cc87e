#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "jflow/errors.hpp"

namespace jflow {

// Periodic grid on the unit torus. Two modes:
//   Reduced: samples depend on the two real coordinates (x1, x2); N^2 nodes.
//            Complex structure still acts on z_j = x_j + i*y_j, but all
//            y-derivatives vanish, so dd^c reduces to 1/4 of the real Hessian.
//   Full:    samples depend on (x1, y1, x2, y2); N^4 nodes.
// Every axis has period 1 and the same resolution.
enum class GridMode : std::uint8_t { Reduced = 0, Full = 1 };

class Grid {
  public:
    Grid(GridMode mode, int resolution) : mode_(mode), n_(resolution) {
        if (resolution < 8)
            throw ConfigError("grid resolution must be at least 8");
        if ((resolution & (resolution - 1)) != 0)
            throw ConfigError("grid resolution must be a power of two");
    }

    GridMode mode() const { return mode_; }
    int resolution() const { return n_; }
    double spacing() const { return 1.0 / n_; }
    int rank() const { return mode_ == GridMode::Reduced ? 2 : 4; }

    std::size_t node_count() const {
        std::size_t n = static_cast<std::size_t>(n_);
        return mode_ == GridMode::Reduced ? n * n : n * n * n * n;
    }

    // Per-axis indices of a flat (row-major) node index. Axis order is
    // (x1, x2) in Reduced mode and (x1, y1, x2, y2) in Full mode.
    std::array<int, 4> unravel(std::size_t idx) const {
        std::array<int, 4> out{0, 0, 0, 0};
        if (mode_ == GridMode::Reduced) {
            out[0] = static_cast<int>(idx / n_);
            out[1] = static_cast<int>(idx % n_);
        } else {
            for (int a = 3; a >= 0; --a) {
                out[a] = static_cast<int>(idx % n_);
                idx /= n_;
            }
        }
        return out;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.mode_ == b.mode_ && a.n_ == b.n_;
    }
    friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }

  private:
    GridMode mode_;
    int n_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (a != b) throw GridMismatchError(std::string("grid mismatch in ") + what);
}

} // namespace jflow
