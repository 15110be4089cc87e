#pragma once

#include <optional>

#include "jflow/geometry.hpp"

namespace jflow {

// Energy functionals of a potential phi relative to backgrounds chi, omega.
//
//   I(phi) = 1/3 Int phi (chi_phi^2 + chi_phi /\ chi + chi^2)
//   J(phi) = Int phi (chi_phi /\ omega + chi /\ omega) - I(phi)
//
// Both equal the path integrals of phi_dot against chi_phi_t^2 resp.
// 2 chi_phi_t /\ omega - chi_phi_t^2 along any smooth path from 0 to phi.
// The flow is the gradient flow of J only under the c = 1 normalization of
// chi; that normalization is enforced where flow and functionals couple
// (flow runner / scenario validation), not here, since the formulas and
// their variational identities hold for any background.

struct FunctionalReport {
    double I_value = 0.0;
    double J_value = 0.0;
    std::optional<double> path_J_value;
    std::optional<double> gradient_check_error;
};

double functional_I(const ScalarField& phi, const HermitianFormField& chi);

double functional_J(const ScalarField& phi, const HermitianFormField& chi,
                    const HermitianFormField& omega);

// Overloads with a precomputed chi_phi = chi + dd^c(phi); used on hot paths.
double functional_I(const ScalarField& phi, const HermitianFormField& chi,
                    const HermitianFormField& chi_phi);
double functional_J(const ScalarField& phi, const HermitianFormField& chi,
                    const HermitianFormField& omega, const HermitianFormField& chi_phi);

// Simpson quadrature of the defining path integral along phi_t = t^path_power * phi
// with `steps` subintervals (even, >= 2). For the linear path the integrand is a
// quadratic polynomial in t, so Simpson is exact; path_power = 2 gives a smooth
// non-polynomial-free degree-5 integrand with the clean steps^-4 convergence used
// by the quadrature-order studies.
double functional_J_path(const ScalarField& phi, const HermitianFormField& chi,
                         const HermitianFormField& omega, int steps, int path_power = 1);

// Density of the first variation of J: 2 chi_phi /\ omega - chi_phi^2.
ScalarField variational_derivative_J(const ScalarField& phi, const HermitianFormField& chi,
                                     const HermitianFormField& omega);

} // namespace jflow
