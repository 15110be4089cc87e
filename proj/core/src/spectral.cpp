#include "jflow/spectral.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "jflow/errors.hpp"

namespace jflow {

namespace {

// Signed frequency of index i on an axis of length n. The Nyquist index maps
// to +n/2; fine for even derivative orders.
inline int signed_freq(int i, int n) { return i <= n / 2 ? i : i - n; }

// Frequency for odd-derivative factors: the Nyquist mode carries no sign
// information, so it is dropped there.
inline int odd_freq(int i, int n) { return i == n / 2 ? 0 : signed_freq(i, n); }

} // namespace

struct SpectralEngine::Impl {
    Grid grid;
    std::mutex mutex;

    std::size_t n_real = 0;
    std::size_t n_spec = 0;

    double* real_buf = nullptr;
    fftw_complex* spec_buf = nullptr;    // forward output
    fftw_complex* scratch_buf = nullptr; // c2r input (destroyed by the transform)
    fftw_plan plan_r2c{};
    fftw_plan plan_c2r{};

    // Per spectral index, the four ddc symbols (real; products of two
    // frequencies are even under k -> -k) with the inverse-transform
    // normalization folded in.
    std::vector<double> sym11, sym22, sym12re, sym12im;
    // Unnormalized variants for the preconditioner denominator.
    std::vector<double> raw11, raw22, raw12re, raw12im;

    explicit Impl(const Grid& g) : grid(g) {
        const int n = g.resolution();
        const int rank = g.rank();
        int dims[4] = {n, n, n, n};

        n_real = g.node_count();
        n_spec = (n_real / n) * (static_cast<std::size_t>(n) / 2 + 1);

        real_buf = fftw_alloc_real(n_real);
        spec_buf = fftw_alloc_complex(n_spec);
        scratch_buf = fftw_alloc_complex(n_spec);

        // FFTW_ESTIMATE keeps plan selection (and hence rounding) deterministic.
        plan_r2c = fftw_plan_dft_r2c(rank, dims, real_buf, spec_buf, FFTW_ESTIMATE);
        plan_c2r = fftw_plan_dft_c2r(rank, dims, scratch_buf, real_buf, FFTW_ESTIMATE);
        if (!plan_r2c || !plan_c2r) throw Error("FFTW plan creation failed");

        build_symbols();
    }

    ~Impl() {
        fftw_destroy_plan(plan_r2c);
        fftw_destroy_plan(plan_c2r);
        fftw_free(real_buf);
        fftw_free(spec_buf);
        fftw_free(scratch_buf);
    }

    void build_symbols() {
        const int n = grid.resolution();
        const int nc = n / 2 + 1;
        const double pi2 = std::numbers::pi * std::numbers::pi;
        const double norm = 1.0 / static_cast<double>(n_real);

        sym11.resize(n_spec);
        sym22.resize(n_spec);
        sym12re.resize(n_spec);
        sym12im.resize(n_spec);
        raw11.resize(n_spec);
        raw22.resize(n_spec);
        raw12re.resize(n_spec);
        raw12im.resize(n_spec);

        if (grid.mode() == GridMode::Reduced) {
            for (int i1 = 0; i1 < n; ++i1) {
                const double m1d = signed_freq(i1, n);
                const double m1o = odd_freq(i1, n);
                for (int i2 = 0; i2 < nc; ++i2) {
                    const double m2d = signed_freq(i2, n);
                    const double m2o = odd_freq(i2, n);
                    const std::size_t idx = static_cast<std::size_t>(i1) * nc + i2;
                    raw11[idx] = -pi2 * m1d * m1d;
                    raw22[idx] = -pi2 * m2d * m2d;
                    raw12re[idx] = -pi2 * m1o * m2o;
                    raw12im[idx] = 0.0;
                    sym11[idx] = raw11[idx] * norm;
                    sym22[idx] = raw22[idx] * norm;
                    sym12re[idx] = raw12re[idx] * norm;
                    sym12im[idx] = 0.0;
                }
            }
        } else {
            // Axis order (x1, y1, x2, y2): frequencies (a, b, c, d).
            for (int ia = 0; ia < n; ++ia)
                for (int ib = 0; ib < n; ++ib)
                    for (int ic = 0; ic < n; ++ic)
                        for (int id = 0; id < nc; ++id) {
                            const double ad = signed_freq(ia, n), ao = odd_freq(ia, n);
                            const double bd = signed_freq(ib, n), bo = odd_freq(ib, n);
                            const double cd = signed_freq(ic, n), co = odd_freq(ic, n);
                            const double dd = signed_freq(id, n), do_ = odd_freq(id, n);
                            const std::size_t idx =
                                ((static_cast<std::size_t>(ia) * n + ib) * n + ic) * nc + id;
                            raw11[idx] = -pi2 * (ad * ad + bd * bd);
                            raw22[idx] = -pi2 * (cd * cd + dd * dd);
                            raw12re[idx] = -pi2 * (ao * co + bo * do_);
                            raw12im[idx] = -pi2 * (bo * co - ao * do_);
                            sym11[idx] = raw11[idx] * norm;
                            sym22[idx] = raw22[idx] * norm;
                            sym12re[idx] = raw12re[idx] * norm;
                            sym12im[idx] = raw12im[idx] * norm;
                        }
        }
    }

    void forward(const double* u) {
        std::memcpy(real_buf, u, n_real * sizeof(double));
        fftw_execute(plan_r2c);
    }

    // scratch := spec .* symbol, then c2r into `out`.
    void inverse_with_symbol(const std::vector<double>& symbol, double* out) {
        for (std::size_t k = 0; k < n_spec; ++k) {
            scratch_buf[k][0] = spec_buf[k][0] * symbol[k];
            scratch_buf[k][1] = spec_buf[k][1] * symbol[k];
        }
        fftw_execute(plan_c2r);
        std::memcpy(out, real_buf, n_real * sizeof(double));
    }
};

SpectralEngine::SpectralEngine(const Grid& grid) : impl_(new Impl(grid)) {}
SpectralEngine::~SpectralEngine() { delete impl_; }

SpectralEngine& SpectralEngine::for_grid(const Grid& grid) {
    static std::mutex registry_mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<SpectralEngine>> registry;

    std::lock_guard<std::mutex> lock(registry_mutex);
    auto key = std::make_pair(static_cast<int>(grid.mode()), grid.resolution());
    auto it = registry.find(key);
    if (it == registry.end())
        it = registry.emplace(key, std::unique_ptr<SpectralEngine>(new SpectralEngine(grid))).first;
    return *it->second;
}

void SpectralEngine::ddc(const double* u, double* e11, double* e22, double* re12, double* im12) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->forward(u);
    impl_->inverse_with_symbol(impl_->sym11, e11);
    impl_->inverse_with_symbol(impl_->sym22, e22);
    impl_->inverse_with_symbol(impl_->sym12re, re12);
    if (impl_->grid.mode() == GridMode::Full) {
        impl_->inverse_with_symbol(impl_->sym12im, im12);
    } else {
        std::memset(im12, 0, impl_->n_real * sizeof(double));
    }
}

void SpectralEngine::inverse_trace_laplacian(const double* r, const Hermitian2& mbar, double* z) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->forward(r);
    const double norm = 1.0 / static_cast<double>(impl_->n_real);
    for (std::size_t k = 0; k < impl_->n_spec; ++k) {
        // denom = 2 wedge11(mbar, S(k)) = -2 pi^2 v* adj(mbar) v < 0 for k != 0.
        const double denom = 2.0 * (mbar.a11 * impl_->raw22[k] + mbar.a22 * impl_->raw11[k] -
                                    2.0 * (mbar.a12.real() * impl_->raw12re[k] +
                                           mbar.a12.imag() * impl_->raw12im[k]));
        if (denom == 0.0) {
            impl_->scratch_buf[k][0] = 0.0;
            impl_->scratch_buf[k][1] = 0.0;
        } else {
            const double s = -norm / denom;
            impl_->scratch_buf[k][0] = impl_->spec_buf[k][0] * s;
            impl_->scratch_buf[k][1] = impl_->spec_buf[k][1] * s;
        }
    }
    fftw_execute(impl_->plan_c2r);
    std::memcpy(z, impl_->real_buf, impl_->n_real * sizeof(double));
}

HermitianFormField ddc(const ScalarField& u) {
    if (!u.all_finite()) throw InvalidFieldError("ddc: potential has non-finite values");
    HermitianFormField out(u.grid());
    SpectralEngine::for_grid(u.grid())
        .ddc(u.data(), out.a11_.data(), out.a22_.data(), out.re12_.data(), out.im12_.data());
    out.class_part_ = Hermitian2{};
    out.potential_ = u;
    return out;
}

void ddc_into(HermitianFormField& out, const Hermitian2& class_part, const ScalarField& potential) {
    require_same_grid(out.grid(), potential.grid(), "ddc_into");
    if (!potential.all_finite()) throw InvalidFieldError("ddc_into: potential has non-finite values");
    SpectralEngine::for_grid(out.grid())
        .ddc(potential.data(), out.a11_.data(), out.a22_.data(), out.re12_.data(),
             out.im12_.data());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.a11_[i] += class_part.a11;
        out.a22_[i] += class_part.a22;
        out.re12_[i] += class_part.a12.real();
        out.im12_[i] += class_part.a12.imag();
    }
    out.class_part_ = class_part;
    out.potential_ = potential;
}

HermitianFormField make_form(const Grid& grid, const Hermitian2& class_part,
                             const std::optional<ScalarField>& potential) {
    if (!potential) return HermitianFormField::constant(grid, class_part);
    HermitianFormField out(grid);
    ddc_into(out, class_part, *potential);
    return out;
}

} // namespace jflow
