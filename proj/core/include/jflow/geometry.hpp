#pragma once

#include "jflow/hermitian.hpp"
#include "jflow/scalar_field.hpp"
#include "jflow/spectral.hpp"

namespace jflow {

// Pointwise wedge algebra of (1,1)-forms on a complex surface, normalized so
// that wedge2(identity) = 2 and integrals are plain grid averages. Only
// ratios of pairings enter the constants below, so the normalization cancels.

// Density of A /\ A: pointwise 2 det(A).
ScalarField wedge2(const HermitianFormField& a);

// Mixed density A /\ B, the polarization of wedge2: wedge11(A, A) == wedge2(A).
ScalarField wedge11(const HermitianFormField& a, const HermitianFormField& b);

// Grid average; the unit torus has unit volume.
double integrate(const ScalarField& s);

// c = 2 [chi].[omega] / [chi]^2; depends only on the classes of the inputs.
double topological_constant(const HermitianFormField& chi, const HermitianFormField& omega);

// Same constant from class vectors alone (closed-form route).
double topological_constant(const ClassVector& chi, const ClassVector& omega);

// Pointwise smaller eigenvalue of the 2x2 Hermitian matrix.
ScalarField min_eigenvalue_field(const HermitianFormField& a);

// Pointwise trace of A with respect to a positive-definite metric:
// g^{jk} A_{jk} via the explicit 2x2 inverse. Throws SingularMetricError
// if the metric is not positive definite at some node.
ScalarField trace_with(const HermitianFormField& metric, const HermitianFormField& a);

inline ClassVector cohomology_class(const HermitianFormField& a) { return a.class_part(); }

} // namespace jflow
