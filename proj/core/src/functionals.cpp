#include "jflow/functionals.hpp"

#include <cmath>

#include "jflow/errors.hpp"

namespace jflow {

namespace {

double mean_of(std::span<const double> xs) {
    return ScalarField::compensated_sum(xs) / static_cast<double>(xs.size());
}

} // namespace

double functional_I(const ScalarField& phi, const HermitianFormField& chi,
                    const HermitianFormField& chi_phi) {
    require_same_grid(phi.grid(), chi.grid(), "functional_I");
    require_same_grid(phi.grid(), chi_phi.grid(), "functional_I");

    std::vector<double> integrand(phi.size());
    auto p11 = chi_phi.a11(), p22 = chi_phi.a22(), pr = chi_phi.re12(), pi = chi_phi.im12();
    auto c11 = chi.a11(), c22 = chi.a22(), cr = chi.re12(), ci = chi.im12();
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double w2_phi = 2.0 * (p11[i] * p22[i] - pr[i] * pr[i] - pi[i] * pi[i]);
        const double w2_chi = 2.0 * (c11[i] * c22[i] - cr[i] * cr[i] - ci[i] * ci[i]);
        const double w11_mix =
            p11[i] * c22[i] + p22[i] * c11[i] - 2.0 * (pr[i] * cr[i] + pi[i] * ci[i]);
        integrand[i] = phi[i] * (w2_phi + w11_mix + w2_chi);
    }
    return mean_of(integrand) / 3.0;
}

double functional_I(const ScalarField& phi, const HermitianFormField& chi) {
    return functional_I(phi, chi, chi + ddc(phi));
}

double functional_J(const ScalarField& phi, const HermitianFormField& chi,
                    const HermitianFormField& omega, const HermitianFormField& chi_phi) {
    require_same_grid(phi.grid(), omega.grid(), "functional_J");

    std::vector<double> integrand(phi.size());
    auto p11 = chi_phi.a11(), p22 = chi_phi.a22(), pr = chi_phi.re12(), pi = chi_phi.im12();
    auto c11 = chi.a11(), c22 = chi.a22(), cr = chi.re12(), ci = chi.im12();
    auto o11 = omega.a11(), o22 = omega.a22(), or_ = omega.re12(), oi = omega.im12();
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double w11_phi_om =
            p11[i] * o22[i] + p22[i] * o11[i] - 2.0 * (pr[i] * or_[i] + pi[i] * oi[i]);
        const double w11_chi_om =
            c11[i] * o22[i] + c22[i] * o11[i] - 2.0 * (cr[i] * or_[i] + ci[i] * oi[i]);
        integrand[i] = phi[i] * (w11_phi_om + w11_chi_om);
    }
    return mean_of(integrand) - functional_I(phi, chi, chi_phi);
}

double functional_J(const ScalarField& phi, const HermitianFormField& chi,
                    const HermitianFormField& omega) {
    return functional_J(phi, chi, omega, chi + ddc(phi));
}

double functional_J_path(const ScalarField& phi, const HermitianFormField& chi,
                         const HermitianFormField& omega, int steps, int path_power) {
    require_same_grid(phi.grid(), chi.grid(), "functional_J_path");
    require_same_grid(phi.grid(), omega.grid(), "functional_J_path");
    if (steps < 2 || steps % 2 != 0)
        throw Error("functional_J_path: Simpson quadrature needs an even step count >= 2");
    if (path_power < 1) throw Error("functional_J_path: path power must be >= 1");

    const HermitianFormField dd_phi = ddc(phi);
    auto d11 = dd_phi.a11(), d22 = dd_phi.a22(), dr = dd_phi.re12(), di = dd_phi.im12();
    auto c11 = chi.a11(), c22 = chi.a22(), cr = chi.re12(), ci = chi.im12();
    auto o11 = omega.a11(), o22 = omega.a22(), or_ = omega.re12(), oi = omega.im12();

    // g(t) = Int (d phi_t / dt) (2 chi_{phi_t} /\ omega - chi_{phi_t}^2),
    // phi_t = t^p phi.
    std::vector<double> integrand(phi.size());
    auto g = [&](double t) {
        const double p = std::pow(t, path_power);
        const double pdot =
            path_power == 1 ? 1.0 : path_power * std::pow(t, path_power - 1);
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const double m11 = c11[i] + p * d11[i];
            const double m22 = c22[i] + p * d22[i];
            const double mr = cr[i] + p * dr[i];
            const double mi = ci[i] + p * di[i];
            const double w11 = m11 * o22[i] + m22 * o11[i] - 2.0 * (mr * or_[i] + mi * oi[i]);
            const double w2 = 2.0 * (m11 * m22 - mr * mr - mi * mi);
            integrand[i] = pdot * phi[i] * (2.0 * w11 - w2);
        }
        return mean_of(integrand);
    };

    const double h = 1.0 / steps;
    double sum = g(0.0) + g(1.0);
    for (int k = 1; k < steps; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * g(k * h);
    return sum * h / 3.0;
}

ScalarField variational_derivative_J(const ScalarField& phi, const HermitianFormField& chi,
                                     const HermitianFormField& omega) {
    require_same_grid(phi.grid(), chi.grid(), "variational_derivative_J");
    require_same_grid(phi.grid(), omega.grid(), "variational_derivative_J");
    const HermitianFormField chi_phi = chi + ddc(phi);
    ScalarField out(phi.grid());
    auto p11 = chi_phi.a11(), p22 = chi_phi.a22(), pr = chi_phi.re12(), pi = chi_phi.im12();
    auto o11 = omega.a11(), o22 = omega.a22(), or_ = omega.re12(), oi = omega.im12();
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double w11 =
            p11[i] * o22[i] + p22[i] * o11[i] - 2.0 * (pr[i] * or_[i] + pi[i] * oi[i]);
        const double w2 = 2.0 * (p11[i] * p22[i] - pr[i] * pr[i] - pi[i] * pi[i]);
        out[i] = 2.0 * w11 - w2;
    }
    return out;
}

} // namespace jflow
