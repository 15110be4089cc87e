#include "jflow/flow.hpp"

#include <cmath>
#include <sstream>

#include "jflow/errors.hpp"

namespace jflow {

namespace {

// chi_phi = chi + dd^c(phi) rebuilt through the combined potential, so a
// single transform set produces the evaluated entries.
HermitianFormField build_chi_phi(const HermitianFormField& chi, const ScalarField& phi) {
    ScalarField pot = chi.potential() ? (*chi.potential() + phi) : phi;
    return make_form(chi.grid(), chi.class_part(), pot);
}

struct RhsEval {
    ScalarField rhs;
    double sup_abs = 0.0;
    double min_eig = 0.0;
};

// RHS with a positivity probe: min_eig <= floor reports the offending node
// instead of dividing by a vanishing determinant.
RhsEval eval_rhs(const HermitianFormField& chi_phi, const HermitianFormField& omega, double c,
                 double floor) {
    RhsEval out{ScalarField(chi_phi.grid()), 0.0, 0.0};
    auto p11 = chi_phi.a11(), p22 = chi_phi.a22(), pr = chi_phi.re12(), pi = chi_phi.im12();
    auto o11 = omega.a11(), o22 = omega.a22(), or_ = omega.re12(), oi = omega.im12();
    double min_eig = chi_phi.min_eig_at(0);
    std::size_t min_node = 0;
    for (std::size_t i = 0; i < chi_phi.size(); ++i) {
        const double eig = chi_phi.min_eig_at(i);
        if (eig < min_eig) {
            min_eig = eig;
            min_node = i;
        }
        const double w2 = 2.0 * (p11[i] * p22[i] - pr[i] * pr[i] - pi[i] * pi[i]);
        const double w11 =
            p11[i] * o22[i] + p22[i] * o11[i] - 2.0 * (pr[i] * or_[i] + pi[i] * oi[i]);
        const double v = c - 2.0 * w11 / w2;
        out.rhs[i] = v;
        out.sup_abs = std::max(out.sup_abs, std::abs(v));
    }
    out.min_eig = min_eig;
    if (!(min_eig > floor)) {
        std::ostringstream msg;
        msg << "chi_phi not positive (min eig " << min_eig << " at node " << min_node << ")";
        throw NotInConeError(msg.str());
    }
    return out;
}

FlowMonitors make_monitors(const FlowProblem& problem, const ScalarField& phi,
                           const HermitianFormField& chi_phi, const RhsEval& rhs, double dt) {
    FlowMonitors m;
    m.I = functional_I(phi, problem.chi, chi_phi);
    m.J = functional_J(phi, problem.chi, problem.omega, chi_phi);
    m.sup_abs_rhs = rhs.sup_abs;
    m.min_eig_chi_phi = rhs.min_eig;
    m.sup_abs_phi = phi.sup_norm();
    m.dt_current = dt;
    return m;
}

// Int phi_dot^2 wedge2(chi_phi): the dissipation density of the energy identity.
double dissipation_rate(const ScalarField& rhs, const HermitianFormField& chi_phi) {
    std::vector<double> integrand(rhs.size());
    auto p11 = chi_phi.a11(), p22 = chi_phi.a22(), pr = chi_phi.re12(), pi = chi_phi.im12();
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        const double w2 = 2.0 * (p11[i] * p22[i] - pr[i] * pr[i] - pi[i] * pi[i]);
        integrand[i] = rhs[i] * rhs[i] * w2;
    }
    return ScalarField::compensated_sum(integrand) / static_cast<double>(rhs.size());
}

} // namespace

FlowState make_flow_state(const FlowProblem& problem, ScalarField phi0, double time) {
    require_same_grid(problem.chi.grid(), problem.omega.grid(), "make_flow_state");
    require_same_grid(problem.chi.grid(), phi0.grid(), "make_flow_state");
    HermitianFormField chi_phi = build_chi_phi(problem.chi, phi0);
    RhsEval rhs = eval_rhs(chi_phi, problem.omega, problem.c, 0.0);
    FlowState state{std::move(phi0), time, std::move(chi_phi), {}};
    state.monitors = make_monitors(problem, state.phi, state.chi_phi, rhs, 0.0);
    return state;
}

ScalarField flow_rhs_cached(const HermitianFormField& chi_phi, const HermitianFormField& omega,
                            double c) {
    require_same_grid(chi_phi.grid(), omega.grid(), "flow_rhs");
    return eval_rhs(chi_phi, omega, c, 0.0).rhs;
}

ScalarField flow_rhs(const ScalarField& phi, const HermitianFormField& chi,
                     const HermitianFormField& omega, double c) {
    require_same_grid(phi.grid(), chi.grid(), "flow_rhs");
    return flow_rhs_cached(build_chi_phi(chi, phi), omega, c);
}

double rhs_rewrite_check(const ScalarField& phi, const HermitianFormField& chi,
                         const HermitianFormField& omega) {
    HermitianFormField chi_phi = build_chi_phi(chi, phi);
    ScalarField direct = flow_rhs_cached(chi_phi, omega, 1.0);
    ScalarField w2_diff = wedge2(chi_phi - omega);
    ScalarField w2_om = wedge2(omega);
    ScalarField w2_phi = wedge2(chi_phi);
    double sup = 0.0;
    for (std::size_t i = 0; i < direct.size(); ++i) {
        const double rewrite = (w2_diff[i] - w2_om[i]) / w2_phi[i];
        sup = std::max(sup, std::abs(direct[i] - rewrite));
    }
    return sup;
}

FlowState step(const FlowProblem& problem, const FlowState& state, double dt,
               double positivity_floor) {
    if (!(dt > 0.0)) throw Error("step: dt must be positive");
    const Grid& grid = state.phi.grid();
    std::string last_failure;

    for (int attempt = 0; attempt <= 20; ++attempt) {
        const double dt_try = dt / static_cast<double>(1 << attempt);
        try {
            ScalarField k1 = flow_rhs_cached(state.chi_phi, problem.omega, problem.c);

            ScalarField phi_stage = state.phi;
            for (std::size_t i = 0; i < phi_stage.size(); ++i)
                phi_stage[i] = state.phi[i] + 0.5 * dt_try * k1[i];
            HermitianFormField cp = build_chi_phi(problem.chi, phi_stage);
            ScalarField k2 = eval_rhs(cp, problem.omega, problem.c, positivity_floor).rhs;

            for (std::size_t i = 0; i < phi_stage.size(); ++i)
                phi_stage[i] = state.phi[i] + 0.5 * dt_try * k2[i];
            ddc_into(cp, problem.chi.class_part(),
                     problem.chi.potential() ? (*problem.chi.potential() + phi_stage) : phi_stage);
            ScalarField k3 = eval_rhs(cp, problem.omega, problem.c, positivity_floor).rhs;

            for (std::size_t i = 0; i < phi_stage.size(); ++i)
                phi_stage[i] = state.phi[i] + dt_try * k3[i];
            ddc_into(cp, problem.chi.class_part(),
                     problem.chi.potential() ? (*problem.chi.potential() + phi_stage) : phi_stage);
            ScalarField k4 = eval_rhs(cp, problem.omega, problem.c, positivity_floor).rhs;

            ScalarField phi_new(grid);
            for (std::size_t i = 0; i < phi_new.size(); ++i)
                phi_new[i] =
                    state.phi[i] + dt_try / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

            HermitianFormField chi_phi_new = build_chi_phi(problem.chi, phi_new);
            RhsEval rhs_new = eval_rhs(chi_phi_new, problem.omega, problem.c, positivity_floor);

            FlowState out{std::move(phi_new), state.time + dt_try, std::move(chi_phi_new), {}};
            out.monitors = make_monitors(problem, out.phi, out.chi_phi, rhs_new, dt_try);
            return out;
        } catch (const NotInConeError& e) {
            // A stage or the tentative state left the cone: halve and retry.
            last_failure = e.what();
            continue;
        } catch (const InvalidFieldError& e) {
            // Overflow from an unstable trial step; treat like a rejection.
            last_failure = e.what();
            continue;
        }
    }

    throw StiffnessError("step: dt underflow after 20 halvings (" + last_failure + ")");
}

double stationarity_residual(const FlowState& state, const HermitianFormField& omega, double c) {
    require_same_grid(state.chi_phi.grid(), omega.grid(), "stationarity_residual");
    auto p11 = state.chi_phi.a11(), p22 = state.chi_phi.a22();
    auto pr = state.chi_phi.re12(), pi = state.chi_phi.im12();
    auto o11 = omega.a11(), o22 = omega.a22(), or_ = omega.re12(), oi = omega.im12();
    double sup = 0.0;
    for (std::size_t i = 0; i < state.chi_phi.size(); ++i) {
        const double w2 = 2.0 * (p11[i] * p22[i] - pr[i] * pr[i] - pi[i] * pi[i]);
        const double w11 =
            p11[i] * o22[i] + p22[i] * o11[i] - 2.0 * (pr[i] * or_[i] + pi[i] * oi[i]);
        sup = std::max(sup, std::abs(c * w2 - 2.0 * w11) / w2);
    }
    return sup;
}

void Trajectory::check_consistent() const {
    const std::size_t n = time.size();
    auto same = [n](const std::vector<double>& v) { return v.empty() || v.size() == n; };
    if (!(I.size() == n && J.size() == n && sup_abs_rhs.size() == n && min_eig.size() == n &&
          sup_abs_phi.size() == n && dt.size() == n && dissipation.size() == n &&
          same(sup_diff_ref) && same(inf_diff_ref)))
        throw Error("trajectory: monitor series lengths disagree");
    for (std::size_t k = 1; k < n; ++k)
        if (!(time[k] > time[k - 1])) throw Error("trajectory: times not strictly increasing");
}

Trajectory run_flow(const FlowRunConfig& config) {
    const FlowProblem& problem = config.problem;
    const Grid& grid = config.phi0.grid();
    require_same_grid(problem.chi.grid(), grid, "run_flow");

    const double chi_floor = problem.chi.min_eig();
    FlowState state = make_flow_state(problem, config.phi0);
    if (state.monitors.min_eig_chi_phi < config.initial_margin_frac * chi_floor) {
        std::ostringstream msg;
        msg << "run_flow: initial data outside the admissible margin (min eig chi_phi0 = "
            << state.monitors.min_eig_chi_phi << " < " << config.initial_margin_frac << " * "
            << chi_floor << ")";
        throw ConfigError(msg.str());
    }
    if (config.reference) require_same_grid(config.reference->grid(), grid, "run_flow reference");

    Trajectory traj;
    traj.reference = config.reference;
    const bool track_ref = config.reference.has_value();

    double cumulative_dissipation = 0.0;
    bool warned_monotone = false;

    auto record = [&](const FlowState& s) {
        traj.time.push_back(s.time);
        traj.I.push_back(s.monitors.I);
        traj.J.push_back(s.monitors.J);
        traj.sup_abs_rhs.push_back(s.monitors.sup_abs_rhs);
        traj.min_eig.push_back(s.monitors.min_eig_chi_phi);
        traj.sup_abs_phi.push_back(s.monitors.sup_abs_phi);
        traj.dt.push_back(s.monitors.dt_current);
        traj.dissipation.push_back(cumulative_dissipation);
        if (track_ref) {
            double sup = -1e300, inf = 1e300;
            for (std::size_t i = 0; i < s.phi.size(); ++i) {
                const double d = s.phi[i] - (*config.reference)[i];
                sup = std::max(sup, d);
                inf = std::min(inf, d);
            }
            traj.sup_diff_ref.push_back(sup);
            traj.inf_diff_ref.push_back(inf);
        }
        if (config.snapshot_stride > 0 &&
            (traj.time.size() - 1) % static_cast<std::size_t>(config.snapshot_stride) == 0)
            traj.snapshots.emplace_back(s.time, s.phi);
    };

    record(state);
    double rate_prev =
        dissipation_rate(flow_rhs_cached(state.chi_phi, problem.omega, problem.c), state.chi_phi);

    const double h2 = grid.spacing() * grid.spacing();
    long step_count = 0;
    const long max_steps = 50'000'000;

    while (true) {
        if (state.monitors.sup_abs_rhs < config.tol_stationary) {
            traj.status = FlowStatus::Converged;
            break;
        }
        if (state.time >= config.t_max * (1.0 - 1e-14)) {
            traj.status = FlowStatus::MaxTime;
            break;
        }
        if (state.monitors.min_eig_chi_phi <= config.positivity_floor) {
            traj.status = FlowStatus::PositivityFloor;
            break;
        }
        if (++step_count > max_steps) throw NoConvergenceError("run_flow: step budget exhausted");

        const double max_tr = trace_with(state.chi_phi, problem.omega).max_value();
        double dt = config.cfl_factor * h2 * state.monitors.min_eig_chi_phi / max_tr;
        dt = std::min(dt, config.t_max - state.time);

        const double J_prev = state.monitors.J;
        FlowState next = step(problem, state, dt, config.positivity_floor);

        ScalarField rhs_new = flow_rhs_cached(next.chi_phi, problem.omega, problem.c);
        const double rate_new = dissipation_rate(rhs_new, next.chi_phi);
        cumulative_dissipation += 0.5 * (next.time - state.time) * (rate_prev + rate_new);
        rate_prev = rate_new;

        if (!warned_monotone && next.monitors.J > J_prev + config.j_slack_per_step) {
            std::ostringstream msg;
            msg << "J increased by " << next.monitors.J - J_prev << " at t = " << next.time
                << " (discretization failure)";
            traj.warnings.push_back(msg.str());
            warned_monotone = true;
        }

        state = std::move(next);
        if (step_count % config.sample_stride == 0) record(state);
    }

    // Terminal sample if the loop broke between strides.
    if (traj.time.empty() || traj.time.back() < state.time) record(state);
    traj.terminal_phi = state.phi;
    traj.check_consistent();
    return traj;
}

} // namespace jflow
