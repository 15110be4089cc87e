#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "jflow/grid.hpp"

namespace jflow {

// Real-valued periodic function sampled on a grid. Row-major node order.
class ScalarField {
  public:
    explicit ScalarField(const Grid& grid, double value = 0.0)
        : grid_(grid), values_(grid.node_count(), value) {}

    static ScalarField zero(const Grid& grid) { return ScalarField(grid); }
    static ScalarField constant(const Grid& grid, double v) { return ScalarField(grid, v); }

    // Sample f(x1, y1, x2, y2); in Reduced mode y1 = y2 = 0.
    template <class F>
    static ScalarField sample(const Grid& grid, F&& f) {
        ScalarField out(grid);
        const double h = grid.spacing();
        for (std::size_t i = 0; i < out.size(); ++i) {
            auto ix = grid.unravel(i);
            if (grid.mode() == GridMode::Reduced)
                out.values_[i] = f(ix[0] * h, 0.0, ix[1] * h, 0.0);
            else
                out.values_[i] = f(ix[0] * h, ix[1] * h, ix[2] * h, ix[3] * h);
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Exact grid average (Neumaier-compensated sum; the grid has unit volume).
    double mean() const {
        return compensated_sum(values_) / static_cast<double>(values_.size());
    }

    double min_value() const {
        double m = values_[0];
        for (double v : values_) m = v < m ? v : m;
        return m;
    }
    double max_value() const {
        double m = values_[0];
        for (double v : values_) m = v > m ? v : m;
        return m;
    }
    double sup_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_grid(grid_, o.grid_, "ScalarField +=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require_same_grid(grid_, o.grid_, "ScalarField -=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    ScalarField& operator+=(double s) {
        for (double& v : values_) v += s;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
    friend ScalarField operator+(ScalarField a, double s) { return a += s; }

    static double compensated_sum(std::span<const double> xs) {
        double sum = 0.0, comp = 0.0;
        for (double x : xs) {
            double t = sum + x;
            if (std::abs(sum) >= std::abs(x))
                comp += (sum - t) + x;
            else
                comp += (x - t) + sum;
            sum = t;
        }
        return sum + comp;
    }

  private:
    Grid grid_;
    std::vector<double> values_;
};

} // namespace jflow
