#pragma once

#include <optional>
#include <span>
#include <vector>

#include "jflow/flow.hpp"

namespace jflow {

// Solver for the (possibly degenerate) complex Monge-Ampere equation
//
//   (alpha + delta omega + dd^c psi)^2 = c_delta f omega^2,   mean(psi) = 0,
//
// by damped Newton on the log determinant ratio, with spectral-preconditioned
// CG for the trace-Laplacian linearizations and a geometric continuation in
// delta for semipositive alpha.

struct EllipticProblem {
    HermitianFormField alpha; // semipositive background (chi - omega in flow scenarios)
    HermitianFormField omega; // positive
    double delta = 0.0;
    ScalarField rhs_density;  // f, strictly positive for the log-Newton solver
    double c_delta = 1.0;     // normalization: integrals of both sides equal

    EllipticProblem(HermitianFormField a, HermitianFormField w, double d, ScalarField f);
};

// c_delta = Int wedge2(alpha + delta omega) / Int f wedge2(omega).
double normalization_constant(const HermitianFormField& alpha, const HermitianFormField& omega,
                              double delta, const ScalarField& rhs_density);
double normalization_constant(const HermitianFormField& alpha, const HermitianFormField& omega,
                              double delta); // f = 1

struct NewtonOptions {
    double tol = 1e-11;       // sup-norm of the log residual
    int max_iter = 100;
    double eig_floor = 1e-12; // line search keeps min eig of alpha_delta above this
    double cg_tol = 1e-13;    // relative residual of the inner linear solves
    int cg_max_iter = 20000;
};

struct EllipticSolution {
    ScalarField psi;             // mean-zero gauge
    double residual_sup = 0.0;
    int newton_iterations = 0;
    std::vector<double> min_eig_series; // min eig of alpha_delta per iteration
    double mass_error_rel = 0.0;        // |Int wedge2(M) - Int c f wedge2(omega)| / |...|
};

EllipticSolution solve_ma_newton(const EllipticProblem& problem, const ScalarField& initial_guess,
                                 const NewtonOptions& options = {});

// Smooth nonnegative weight vanishing exactly on the degeneracy locus of
// alpha; nodes with weight >= threshold form the "compact subset" of the
// trace diagnostics.
struct DegeneracySurrogate {
    ScalarField weight;
    double threshold = 0.1;
};

struct FamilyRecord {
    double delta = 0.0;
    double c_delta = 0.0;
    double sup_psi = 0.0;
    double cauchy_increment = 0.0; // sup|psi_k - psi_{k-1}|, 0 for the first record
    int newton_iters = 0;
    double compact_trace = 0.0;     // sup of tr_omega(alpha_delta) over weight >= threshold
    double global_trace = 0.0;      // sup of tr_omega(alpha_delta) over all nodes
    double compact_trace_inv = 0.0; // sup of tr_{alpha_delta}(omega) over weight >= threshold
    double global_trace_inv = 0.0;  // sup of tr_{alpha_delta}(omega) over all nodes
};

struct FamilyDiagnostics {
    std::vector<FamilyRecord> records;
};

// Continuation: solve for each delta in a decreasing schedule, warm-starting
// from the previous solution; returns the final solution and per-delta
// diagnostics. Requires min eig(alpha) >= -1e-10 and [alpha]^2 > 0.
std::pair<EllipticSolution, FamilyDiagnostics> solve_degenerate_family(
    const HermitianFormField& alpha, const HermitianFormField& omega,
    std::span<const double> delta_schedule, const ScalarField& rhs_density,
    const NewtonOptions& options = {},
    const std::optional<DegeneracySurrogate>& surrogate = std::nullopt);

// Default schedule 2^-1, 2^-2, ..., 2^-12.
std::vector<double> default_delta_schedule();

struct TraceReport {
    double compact_sup_trace = 0.0;
    double global_sup_trace = 0.0;
    double compact_sup_inverse_trace = 0.0;
    double global_sup_inverse_trace = 0.0;
    double q_sup = 0.0; // sup over the compact subset of log tr - A (psi - a log weight)
};

// Traces of alpha_delta = alpha + delta omega + dd^c psi against omega (and
// the inverse trace of omega against alpha_delta, the quantity that grows as
// the family degenerates), split into compact-subset and global suprema.
TraceReport trace_diagnostic(const EllipticSolution& solution, const HermitianFormField& alpha,
                             const HermitianFormField& omega, double delta,
                             const DegeneracySurrogate& surrogate, double q_const_A = 1.0,
                             double q_const_a = 1.0);

struct ComparisonReport {
    double eps = 0.0;
    // Upper side: M(t) = sup(phi(t) - psi) - eps t should peak at t = 0.
    double m_initial = 0.0;
    double m_max = 0.0;
    double argmax_time = 0.0;
    // Mirrored lower side: L(t) = inf(phi(t) - psi) + eps t should dip at t = 0.
    double l_initial = 0.0;
    double l_min = 0.0;
    double argmin_time = 0.0;

    bool max_at_initial(double slack) const { return m_max <= m_initial + slack; }
    bool min_at_initial(double slack) const { return l_min >= l_initial - slack; }
    bool pass(double slack) const { return max_at_initial(slack) && min_at_initial(slack); }
};

// Evaluates H_eps = phi - psi - eps t along a trajectory recorded with
// `psi` as its reference field. Requires eps > 0.
ComparisonReport comparison_H_epsilon(const Trajectory& trajectory, const ScalarField& psi,
                                      double eps);

// Sup-norm of wedge2(alpha + dd^c psi) - c_target f wedge2(omega).
double residual_ma(const ScalarField& psi, const HermitianFormField& alpha,
                   const HermitianFormField& omega, double c_target, const ScalarField& f);

} // namespace jflow
