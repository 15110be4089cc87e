#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "jflow/functionals.hpp"
#include "jflow/random.hpp"

using namespace jflow;

namespace {

constexpr double kPi = std::numbers::pi;

// Test-side Simpson quadrature of the defining path integrals along the
// linear path phi_t = t phi, built from the geometry primitives only; the
// independent oracle for the closed-form functionals.
double path_integral_I(const ScalarField& phi, const HermitianFormField& chi, int steps) {
    HermitianFormField dd_phi = ddc(phi);
    auto g = [&](double t) {
        HermitianFormField chi_t = chi + t * dd_phi;
        ScalarField w2 = wedge2(chi_t);
        std::vector<double> integrand(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) integrand[i] = phi[i] * w2[i];
        return ScalarField::compensated_sum(integrand) / static_cast<double>(phi.size());
    };
    const double h = 1.0 / steps;
    double sum = g(0.0) + g(1.0);
    for (int k = 1; k < steps; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * g(k * h);
    return sum * h / 3.0;
}

double path_integral_J(const ScalarField& phi, const HermitianFormField& chi,
                       const HermitianFormField& omega, int steps) {
    HermitianFormField dd_phi = ddc(phi);
    auto g = [&](double t) {
        HermitianFormField chi_t = chi + t * dd_phi;
        ScalarField w11 = wedge11(chi_t, omega);
        ScalarField w2 = wedge2(chi_t);
        std::vector<double> integrand(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i)
            integrand[i] = phi[i] * (2.0 * w11[i] - w2[i]);
        return ScalarField::compensated_sum(integrand) / static_cast<double>(phi.size());
    };
    const double h = 1.0 / steps;
    double sum = g(0.0) + g(1.0);
    for (int k = 1; k < steps; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * g(k * h);
    return sum * h / 3.0;
}

} // namespace

TEST_CASE("I at zero and at constants") {
    Grid g(GridMode::Reduced, 32);
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    CHECK(functional_I(ScalarField::zero(g), id) == doctest::Approx(0.0));
    // I(const k) = k [chi]^2 and [identity]^2 integrates to 2.
    CHECK(functional_I(ScalarField::constant(g, 0.7), id) == doctest::Approx(1.4));
}

TEST_CASE("I against the path-integral oracle") {
    Grid g(GridMode::Reduced, 64);
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    ScalarField phi = ScalarField::sample(g, [](double x1, double, double, double) {
        return 0.01 * std::cos(2.0 * kPi * x1);
    });
    const double closed = functional_I(phi, id);
    const double path = path_integral_I(phi, id, 64);
    CHECK(std::abs(closed - path) < 1e-9);
}

TEST_CASE("J at zero and at constants") {
    Grid g(GridMode::Reduced, 32);
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    CHECK(functional_J(ScalarField::zero(g), id, id) == doctest::Approx(0.0));
    // Constants-only evaluation: 2*2k - 2k = 2k.
    CHECK(functional_J(ScalarField::constant(g, 0.3), id, id) == doctest::Approx(0.6));
}

TEST_CASE("J against the path-integral oracle on random fields") {
    Grid g(GridMode::Reduced, 64);
    SplitMix64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        HermitianFormField chi =
            make_form(g, 2.0 * Hermitian2::identity(), random_band_limited(g, 6, 4, 0.2, 900 + rep));
        HermitianFormField omega =
            make_form(g, Hermitian2::identity(), random_band_limited(g, 6, 4, 0.1, 950 + rep));
        ScalarField phi = random_band_limited(g, 6, 5, 0.05 + 0.05 * rng.uniform(), 990 + rep);
        const double closed = functional_J(phi, chi, omega);
        const double path = path_integral_J(phi, chi, omega, 64);
        CHECK(std::abs(closed - path) < 1e-8);
    }
}

TEST_CASE("J path quadrature basics") {
    Grid g(GridMode::Reduced, 32);
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    for (int steps : {2, 8, 64}) {
        CHECK(functional_J_path(ScalarField::zero(g), id, id, steps) == doctest::Approx(0.0));
        // Linear-path integrand is polynomial of degree two: Simpson is exact.
        CHECK(functional_J_path(ScalarField::constant(g, 0.3), id, id, steps) ==
              doctest::Approx(0.6));
    }
    CHECK_THROWS(functional_J_path(ScalarField::zero(g), id, id, 3));
}

TEST_CASE("Simpson halving ratio on the quadratic path") {
    // Along phi_t = t^2 phi the integrand is a degree-5 polynomial in t whose
    // quintic coefficient is -Int phi wedge2(ddc phi); that pairing needs a
    // resonant wavevector triple (k + l + m = 0) to be nonzero, so the field
    // mixes e1, e2 and e1 + e2. Simpson error then scales as steps^-4 and the
    // halving ratio approaches 16.
    Grid g(GridMode::Reduced, 32);
    auto chi = HermitianFormField::constant(g, 2.0 * Hermitian2::identity());
    auto omega = HermitianFormField::constant(g, Hermitian2::identity());
    ScalarField phi = ScalarField::sample(g, [](double x1, double, double x2, double) {
        return 0.05 * (std::cos(2.0 * kPi * x1) + std::cos(2.0 * kPi * x2) +
                       std::cos(2.0 * kPi * (x1 + x2)));
    });
    const double exact = functional_J(phi, chi, omega);

    const double e1 = std::abs(functional_J_path(phi, chi, omega, 8, 2) - exact);
    const double e2 = std::abs(functional_J_path(phi, chi, omega, 16, 2) - exact);
    const double ratio = e1 / e2;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("variational derivative point values") {
    Grid g(GridMode::Reduced, 32);
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    auto two_id = HermitianFormField::constant(g, 2.0 * Hermitian2::identity());
    // chi = 2 omega is critical at c = 1: density vanishes.
    ScalarField crit = variational_derivative_J(ScalarField::zero(g), two_id, id);
    CHECK(crit.sup_norm() < 1e-14);
    // chi = omega = identity: 2*2 - 2 = 2.
    ScalarField v = variational_derivative_J(ScalarField::zero(g), id, id);
    CHECK(v[0] == doctest::Approx(2.0));
}

TEST_CASE("central-difference gradient oracle") {
    Grid g(GridMode::Reduced, 32);
    HermitianFormField chi =
        make_form(g, 2.0 * Hermitian2::identity(), random_band_limited(g, 5, 4, 0.2, 1000));
    auto omega = HermitianFormField::constant(g, Hermitian2::identity());
    ScalarField phi = random_band_limited(g, 5, 5, 0.1, 1001);
    ScalarField density = variational_derivative_J(phi, chi, omega);

    const double h = 1e-5;
    for (int d = 0; d < 5; ++d) {
        ScalarField eta = random_band_limited(g, 5, 5, 1.0, 1100 + d);
        ScalarField plus = phi, minus = phi;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            plus[i] += h * eta[i];
            minus[i] -= h * eta[i];
        }
        const double fd =
            (functional_J(plus, chi, omega) - functional_J(minus, chi, omega)) / (2.0 * h);
        std::vector<double> prod(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) prod[i] = eta[i] * density[i];
        const double analytic =
            ScalarField::compensated_sum(prod) / static_cast<double>(prod.size());
        CHECK(std::abs(fd - analytic) <= 1e-6 * std::max(1e-12, std::abs(analytic)));
    }
}

TEST_CASE("shift rule") {
    Grid g(GridMode::Reduced, 32);
    HermitianFormField chi =
        make_form(g, Hermitian2{1.5, 2.0, {0.2, 0.0}}, random_band_limited(g, 5, 4, 0.1, 1200));
    ScalarField phi = random_band_limited(g, 5, 5, 0.2, 1201);
    const double chi2 = integrate(wedge2(chi));
    const double base = functional_I(phi, chi);
    for (double k : {0.3, -1.1}) {
        const double shifted = functional_I(phi + k, chi);
        CHECK(std::abs(shifted - (base + k * chi2)) < 1e-10 * std::max(1.0, std::abs(shifted)));
    }
}

TEST_CASE("functional continuity along a convergent sequence") {
    // A uniformly bounded sequence converging smoothly has converging
    // functional values.
    Grid g(GridMode::Reduced, 32);
    auto chi = HermitianFormField::constant(g, 2.0 * Hermitian2::identity());
    auto omega = HermitianFormField::constant(g, Hermitian2::identity());
    ScalarField limit = random_band_limited(g, 5, 5, 0.1, 1500);
    ScalarField bump = random_band_limited(g, 5, 5, 0.1, 1501);
    const double I_limit = functional_I(limit, chi);
    const double J_limit = functional_J(limit, chi, omega);

    double prev_I_gap = 1e300, prev_J_gap = 1e300;
    for (int j = 1; j <= 6; ++j) {
        const double w = std::pow(2.0, -j);
        ScalarField approx = limit;
        for (std::size_t i = 0; i < approx.size(); ++i) approx[i] += w * bump[i];
        const double I_gap = std::abs(functional_I(approx, chi) - I_limit);
        const double J_gap = std::abs(functional_J(approx, chi, omega) - J_limit);
        CHECK(I_gap < prev_I_gap);
        CHECK(J_gap < prev_J_gap);
        prev_I_gap = I_gap;
        prev_J_gap = J_gap;
    }
    CHECK(prev_I_gap < 1e-3);
    CHECK(prev_J_gap < 1e-3);
}
