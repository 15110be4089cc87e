#pragma once

#include <complex>
#include <vector>

#include "jflow/grid.hpp"
#include "jflow/hermitian.hpp"

namespace jflow {

// FFT-backed kernels on a fixed grid: the complex Hessian dd^c of a real
// potential, and the inverse of the constant-coefficient trace Laplacian
// used as the Newton preconditioner. Plans and work buffers are cached per
// grid; access through for_grid().
//
// Conventions: dd^c u has (j,k) entry
//   1/4 (d_{x_j} d_{x_k} + d_{y_j} d_{y_k}) u + (i/4)(d_{y_j} d_{x_k} - d_{x_j} d_{y_k}) u
// with unit periods, so a single Fourier mode exp(2 pi i m.x) maps to the
// matrix -pi^2 [ (m_{x_j} m_{x_k} + m_{y_j} m_{y_k}) + i (m_{y_j} m_{x_k} - m_{x_j} m_{y_k}) ].
// Reduced mode is the y-independent case: exactly 1/4 of the real Hessian.
class SpectralEngine {
  public:
    // Shared engine for a grid; created lazily, lives for the process.
    static SpectralEngine& for_grid(const Grid& grid);

    // Entries of dd^c u into four preallocated real arrays (im12 is zero in
    // Reduced mode but still written).
    void ddc(const double* u, double* e11, double* e22, double* re12, double* im12);

    // Solve 2 * wedge11(mbar, dd^c z) = -r for mean-zero z, with constant
    // coefficient matrix mbar (positive definite). Spectral inverse; the DC
    // mode of the result is zero.
    void inverse_trace_laplacian(const double* r, const Hermitian2& mbar, double* z);

    SpectralEngine(const SpectralEngine&) = delete;
    SpectralEngine& operator=(const SpectralEngine&) = delete;
    ~SpectralEngine();

  private:
    explicit SpectralEngine(const Grid& grid);

    struct Impl;
    Impl* impl_;
};

// dd^c of a potential: class part zero, provenance potential u.
HermitianFormField ddc(const ScalarField& u);

// Rebuild `out` in place as class_part + dd^c(potential) (one transform set).
void ddc_into(HermitianFormField& out, const Hermitian2& class_part, const ScalarField& potential);

// constant + optional dd^c(potential).
HermitianFormField make_form(const Grid& grid, const Hermitian2& class_part,
                             const std::optional<ScalarField>& potential);

} // namespace jflow
