#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jflow/functionals.hpp"

namespace jflow {

// Parabolic flow  d phi / dt = c - 2 chi_phi /\ omega / chi_phi^2  on the cone
// of potentials with chi_phi > 0, integrated with explicit RK4 under a
// Hessian-scaled parabolic CFL.

struct FlowProblem {
    HermitianFormField chi;
    HermitianFormField omega;
    double c = 1.0;
};

struct FlowMonitors {
    double I = 0.0;
    double J = 0.0;
    double sup_abs_rhs = 0.0;
    double min_eig_chi_phi = 0.0;
    double sup_abs_phi = 0.0;
    double dt_current = 0.0;
};

struct FlowState {
    ScalarField phi;
    double time = 0.0;
    HermitianFormField chi_phi; // cache: chi + dd^c(phi)
    FlowMonitors monitors;
};

// Build a state with coherent cache and monitors; requires chi_phi > 0.
FlowState make_flow_state(const FlowProblem& problem, ScalarField phi0, double time = 0.0);

// Right-hand side c - 2 chi_phi /\ omega / chi_phi^2. Throws NotInConeError
// if chi_phi is not positive definite everywhere.
ScalarField flow_rhs(const ScalarField& phi, const HermitianFormField& chi,
                     const HermitianFormField& omega, double c);
ScalarField flow_rhs_cached(const HermitianFormField& chi_phi, const HermitianFormField& omega,
                            double c);

// Sup-norm gap between the RHS and its Monge-Ampere rewrite
// (wedge2(chi_phi - omega) - wedge2(omega)) / wedge2(chi_phi), valid at c = 1.
// Pure algebra: the gap is rounding only.
double rhs_rewrite_check(const ScalarField& phi, const HermitianFormField& chi,
                         const HermitianFormField& omega);

// One explicit RK4 step. Rejects and halves dt (up to 20 times) whenever a
// stage or the tentative state violates min eig chi_phi >= positivity_floor;
// throws StiffnessError on dt underflow, reporting the offending node.
FlowState step(const FlowProblem& problem, const FlowState& state, double dt,
               double positivity_floor = 1e-10);

// Residual of the critical equation c chi_phi^2 = 2 chi_phi /\ omega:
// sup over nodes of |c wedge2 - 2 wedge11| / wedge2.
double stationarity_residual(const FlowState& state, const HermitianFormField& omega, double c);

enum class FlowStatus { Converged, MaxTime, PositivityFloor };

struct FlowRunConfig {
    FlowProblem problem;
    ScalarField phi0;
    double cfl_factor = 0.2;
    double tol_stationary = 1e-9;
    double t_max = 1e4;
    int sample_stride = 1;          // record monitors every k-th step
    int snapshot_stride = 0;        // field snapshots every k-th sample (0 = off)
    double positivity_floor = 1e-10;
    double initial_margin_frac = 0.05; // reject phi0 if min eig chi_phi0 < frac * min eig chi
    double j_slack_per_step = 1e-8;    // non-monotone J beyond this -> warning
    std::optional<ScalarField> reference; // records sup/inf(phi - reference) when present

    FlowRunConfig(FlowProblem p, ScalarField phi0_)
        : problem(std::move(p)), phi0(std::move(phi0_)) {}
};

struct Trajectory {
    std::vector<double> time;
    std::vector<double> I;
    std::vector<double> J;
    std::vector<double> sup_abs_rhs;
    std::vector<double> min_eig;
    std::vector<double> sup_abs_phi;
    std::vector<double> dt;
    std::vector<double> dissipation;   // cumulative Int Int phi_dot^2 wedge2(chi_phi)
    std::vector<double> sup_diff_ref;  // sup(phi - reference), when configured
    std::vector<double> inf_diff_ref;  // inf(phi - reference), when configured
    std::vector<std::pair<double, ScalarField>> snapshots;
    FlowStatus status = FlowStatus::MaxTime;
    std::vector<std::string> warnings;
    std::optional<ScalarField> terminal_phi;
    std::optional<ScalarField> reference;

    std::size_t samples() const { return time.size(); }
    void check_consistent() const; // lengths agree, times strictly increasing
};

Trajectory run_flow(const FlowRunConfig& config);

} // namespace jflow
