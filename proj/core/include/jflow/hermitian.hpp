#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "jflow/scalar_field.hpp"

namespace jflow {

// Constant 2x2 Hermitian matrix: real diagonal, complex off-diagonal
// (the (2,1) entry is implicitly conj(a12)).
struct Hermitian2 {
    double a11 = 0.0;
    double a22 = 0.0;
    std::complex<double> a12{0.0, 0.0};

    static Hermitian2 identity() { return {1.0, 1.0, {0.0, 0.0}}; }
    static Hermitian2 diag(double d1, double d2) { return {d1, d2, {0.0, 0.0}}; }

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - std::norm(a12); }
    double min_eig() const {
        const double half_tr = 0.5 * trace();
        const double disc = std::sqrt(std::max(0.0, half_tr * half_tr - det()));
        return half_tr - disc;
    }

    friend Hermitian2 operator+(const Hermitian2& a, const Hermitian2& b) {
        return {a.a11 + b.a11, a.a22 + b.a22, a.a12 + b.a12};
    }
    friend Hermitian2 operator-(const Hermitian2& a, const Hermitian2& b) {
        return {a.a11 - b.a11, a.a22 - b.a22, a.a12 - b.a12};
    }
    friend Hermitian2 operator*(double s, const Hermitian2& a) {
        return {s * a.a11, s * a.a22, s * a.a12};
    }
};

// The cohomology class of a closed (1,1)-form on the torus is its constant part.
using ClassVector = Hermitian2;

// Density of A /\ A against the coordinate volume: 2 det(A).
inline double wedge2_const(const Hermitian2& a) { return 2.0 * a.det(); }

// Polarization of wedge2_const: wedge11_const(A, A) == wedge2_const(A).
inline double wedge11_const(const Hermitian2& a, const Hermitian2& b) {
    return a.a11 * b.a22 + a.a22 * b.a11 - 2.0 * (a.a12.real() * b.a12.real() + a.a12.imag() * b.a12.imag());
}

// Pointwise 2x2 Hermitian coefficient field of a real closed (1,1)-form.
// Closedness is structural: every instance is (constant class part) + dd^c(potential).
// The evaluated per-node entries are stored alongside the provenance so pointwise
// algebra needs no transforms.
class HermitianFormField {
  public:
    static HermitianFormField constant(const Grid& grid, const Hermitian2& c) {
        HermitianFormField f(grid);
        f.class_part_ = c;
        std::fill(f.a11_.begin(), f.a11_.end(), c.a11);
        std::fill(f.a22_.begin(), f.a22_.end(), c.a22);
        std::fill(f.re12_.begin(), f.re12_.end(), c.a12.real());
        std::fill(f.im12_.begin(), f.im12_.end(), c.a12.imag());
        return f;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return a11_.size(); }

    const ClassVector& class_part() const { return class_part_; }
    const std::optional<ScalarField>& potential() const { return potential_; }
    bool is_constant() const { return !potential_.has_value(); }

    std::span<const double> a11() const { return a11_; }
    std::span<const double> a22() const { return a22_; }
    std::span<const double> re12() const { return re12_; }
    std::span<const double> im12() const { return im12_; }
    std::span<double> a11() { return a11_; }
    std::span<double> a22() { return a22_; }
    std::span<double> re12() { return re12_; }
    std::span<double> im12() { return im12_; }

    Hermitian2 at(std::size_t i) const {
        return {a11_[i], a22_[i], {re12_[i], im12_[i]}};
    }

    double det_at(std::size_t i) const {
        return a11_[i] * a22_[i] - (re12_[i] * re12_[i] + im12_[i] * im12_[i]);
    }
    double min_eig_at(std::size_t i) const { return at(i).min_eig(); }

    double min_eig() const {
        double m = min_eig_at(0);
        for (std::size_t i = 1; i < size(); ++i) m = std::min(m, min_eig_at(i));
        return m;
    }

    HermitianFormField& operator+=(const HermitianFormField& o) {
        require_same_grid(grid_, o.grid_, "HermitianFormField +=");
        for (std::size_t i = 0; i < size(); ++i) {
            a11_[i] += o.a11_[i];
            a22_[i] += o.a22_[i];
            re12_[i] += o.re12_[i];
            im12_[i] += o.im12_[i];
        }
        class_part_ = class_part_ + o.class_part_;
        combine_potential(o.potential_, +1.0);
        return *this;
    }
    HermitianFormField& operator-=(const HermitianFormField& o) {
        require_same_grid(grid_, o.grid_, "HermitianFormField -=");
        for (std::size_t i = 0; i < size(); ++i) {
            a11_[i] -= o.a11_[i];
            a22_[i] -= o.a22_[i];
            re12_[i] -= o.re12_[i];
            im12_[i] -= o.im12_[i];
        }
        class_part_ = class_part_ - o.class_part_;
        combine_potential(o.potential_, -1.0);
        return *this;
    }
    HermitianFormField& operator*=(double s) {
        for (std::size_t i = 0; i < size(); ++i) {
            a11_[i] *= s;
            a22_[i] *= s;
            re12_[i] *= s;
            im12_[i] *= s;
        }
        class_part_ = s * class_part_;
        if (potential_) *potential_ *= s;
        return *this;
    }

    friend HermitianFormField operator+(HermitianFormField a, const HermitianFormField& b) { return a += b; }
    friend HermitianFormField operator-(HermitianFormField a, const HermitianFormField& b) { return a -= b; }
    friend HermitianFormField operator*(double s, HermitianFormField a) { return a *= s; }

  private:
    explicit HermitianFormField(const Grid& grid)
        : grid_(grid),
          a11_(grid.node_count()),
          a22_(grid.node_count()),
          re12_(grid.node_count()),
          im12_(grid.node_count()) {}

    void combine_potential(const std::optional<ScalarField>& other, double sign) {
        if (!other) return;
        if (!potential_) {
            potential_ = (sign > 0) ? *other : -1.0 * (*other);
        } else if (sign > 0) {
            *potential_ += *other;
        } else {
            *potential_ -= *other;
        }
    }

    friend HermitianFormField ddc(const ScalarField& u);
    friend void ddc_into(HermitianFormField& out, const Hermitian2& class_part, const ScalarField& potential);
    friend HermitianFormField make_form(const Grid& grid, const Hermitian2& class_part,
                                        const std::optional<ScalarField>& potential);

    Grid grid_;
    Hermitian2 class_part_;
    std::optional<ScalarField> potential_;
    std::vector<double> a11_, a22_, re12_, im12_;
};

} // namespace jflow
