#include "jflow/elliptic.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "jflow/errors.hpp"

namespace jflow {

namespace {

double plain_dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void subtract_mean(std::vector<double>& v) {
    const double m = ScalarField::compensated_sum(v) / static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

// A x = -2 wedge11(M, dd^c x): the (sign-flipped) trace-Laplacian
// linearization of log wedge2 at M, positive definite on mean-zero fields.
void apply_linearization(const HermitianFormField& m, const ScalarField& x,
                         HermitianFormField& scratch, std::vector<double>& out) {
    ddc_into(scratch, Hermitian2{}, x);
    auto m11 = m.a11(), m22 = m.a22(), mr = m.re12(), mi = m.im12();
    auto x11 = scratch.a11(), x22 = scratch.a22(), xr = scratch.re12(), xi = scratch.im12();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = -2.0 * (m11[i] * x22[i] + m22[i] * x11[i] - 2.0 * (mr[i] * xr[i] + mi[i] * xi[i]));
    subtract_mean(out);
}

Hermitian2 mean_matrix(const HermitianFormField& m) {
    auto avg = [](std::span<const double> v) {
        return ScalarField::compensated_sum(v) / static_cast<double>(v.size());
    };
    return Hermitian2{avg(m.a11()), avg(m.a22()), {avg(m.re12()), avg(m.im12())}};
}

// Preconditioned conjugate gradients with the constant-coefficient spectral
// inverse; returns a mean-zero solution of A eta = b.
ScalarField pcg_solve(const HermitianFormField& m, std::vector<double> b, double rel_tol,
                      int max_iter) {
    const Grid& grid = m.grid();
    SpectralEngine& engine = SpectralEngine::for_grid(grid);
    const Hermitian2 mbar = mean_matrix(m);
    const std::size_t n = b.size();

    subtract_mean(b);
    const double b_norm = std::sqrt(plain_dot(b, b));
    ScalarField x(grid);
    if (b_norm == 0.0) return x;

    HermitianFormField scratch = ddc(x); // shape-only; rewritten by every apply
    std::vector<double> r = b, z(n), ap(n);
    ScalarField p(grid);

    engine.inverse_trace_laplacian(r.data(), mbar, z.data());
    std::copy(z.begin(), z.end(), p.values().begin());
    double rz = plain_dot(r, z);

    for (int it = 0; it < max_iter; ++it) {
        apply_linearization(m, p, scratch, ap);
        const double p_ap = plain_dot(p.values(), ap);
        if (!(p_ap > 0.0)) break; // lost definiteness to rounding; keep best iterate
        const double alpha = rz / p_ap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if (std::sqrt(plain_dot(r, r)) <= rel_tol * b_norm) break;
        engine.inverse_trace_laplacian(r.data(), mbar, z.data());
        const double rz_new = plain_dot(r, z);
        const double beta = rz_new / rz;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rz = rz_new;
    }

    const double xm = x.mean();
    x += -xm;
    return x;
}

struct Residual {
    std::vector<double> log_res; // log wedge2(M) - log target
    std::vector<double> w2;      // wedge2(M)
    double sup = 0.0;
    double min_eig = 0.0;
};

bool eval_residual(const HermitianFormField& m, const std::vector<double>& log_target,
                   double eig_floor, Residual& out) {
    const std::size_t n = m.size();
    out.log_res.resize(n);
    out.w2.resize(n);
    out.sup = 0.0;
    out.min_eig = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double eig = m.min_eig_at(i);
        out.min_eig = std::min(out.min_eig, eig);
        if (!(eig > eig_floor)) return false;
        const double w2 = 2.0 * m.det_at(i);
        out.w2[i] = w2;
        out.log_res[i] = std::log(w2) - log_target[i];
        out.sup = std::max(out.sup, std::abs(out.log_res[i]));
    }
    return true;
}

} // namespace

EllipticProblem::EllipticProblem(HermitianFormField a, HermitianFormField w, double d,
                                 ScalarField f)
    : alpha(std::move(a)), omega(std::move(w)), delta(d), rhs_density(std::move(f)) {
    require_same_grid(alpha.grid(), omega.grid(), "EllipticProblem");
    require_same_grid(alpha.grid(), rhs_density.grid(), "EllipticProblem");
    if (delta < 0.0) throw ConfigError("EllipticProblem: delta must be nonnegative");
    if (delta > 0.0 && !((alpha + delta * omega).min_eig() > 0.0))
        throw ConfigError("EllipticProblem: alpha + delta omega must be positive for delta > 0");
    if (!rhs_density.all_finite()) throw InvalidFieldError("EllipticProblem: rhs not finite");
    c_delta = normalization_constant(alpha, omega, delta, rhs_density);
}

double normalization_constant(const HermitianFormField& alpha, const HermitianFormField& omega,
                              double delta, const ScalarField& rhs_density) {
    require_same_grid(alpha.grid(), omega.grid(), "normalization_constant");
    require_same_grid(alpha.grid(), rhs_density.grid(), "normalization_constant");
    ScalarField w2_om = wedge2(omega);
    std::vector<double> weighted(w2_om.size());
    for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] = rhs_density[i] * w2_om[i];
    const double denom =
        ScalarField::compensated_sum(weighted) / static_cast<double>(weighted.size());
    if (!(std::abs(denom) > 0.0))
        throw Error("normalization_constant: Int f wedge2(omega) vanishes");
    const double numer = integrate(wedge2(alpha + delta * omega));
    return numer / denom;
}

double normalization_constant(const HermitianFormField& alpha, const HermitianFormField& omega,
                              double delta) {
    return normalization_constant(alpha, omega, delta, ScalarField::constant(alpha.grid(), 1.0));
}

EllipticSolution solve_ma_newton(const EllipticProblem& problem, const ScalarField& initial_guess,
                                 const NewtonOptions& options) {
    const Grid& grid = problem.alpha.grid();
    require_same_grid(grid, initial_guess.grid(), "solve_ma_newton");

    // Background alpha + delta omega as (class, potential); psi extends the potential.
    HermitianFormField m0 = problem.alpha + problem.delta * problem.omega;
    const Hermitian2 m0_class = m0.class_part();
    const ScalarField m0_potential =
        m0.potential() ? *m0.potential() : ScalarField::zero(grid);

    // log(c_delta f wedge2(omega)); the log-Newton route needs a strictly
    // positive right-hand density.
    ScalarField w2_om = wedge2(problem.omega);
    std::vector<double> log_target(grid.node_count());
    for (std::size_t i = 0; i < log_target.size(); ++i) {
        const double t = problem.c_delta * problem.rhs_density[i] * w2_om[i];
        if (!(t > 0.0))
            throw ConfigError("solve_ma_newton: right-hand density must be strictly positive");
        log_target[i] = std::log(t);
    }

    ScalarField psi = initial_guess;
    psi += -psi.mean();

    HermitianFormField m = make_form(grid, m0_class, m0_potential + psi);
    Residual res;
    if (!eval_residual(m, log_target, options.eig_floor, res))
        throw ContinuationNeededError(
            "solve_ma_newton: initial alpha_delta not positive; use the regularized family");

    EllipticSolution solution{ScalarField::zero(grid), 0.0, 0, {}, 0.0};
    solution.min_eig_series.push_back(res.min_eig);

    for (int iter = 0;; ++iter) {
        if (res.sup <= options.tol) {
            solution.newton_iterations = iter;
            break;
        }
        if (iter >= options.max_iter)
            throw NoConvergenceError("solve_ma_newton: max iterations without convergence");

        std::vector<double> b(grid.node_count());
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = res.log_res[i] * res.w2[i];
        ScalarField eta = pcg_solve(m, std::move(b), options.cg_tol, options.cg_max_iter);

        // Backtracking: keep alpha_delta positive and the residual decreasing.
        double s = 1.0;
        bool accepted = false;
        bool positivity_blocked = false;
        Residual res_try;
        ScalarField psi_try(grid);
        HermitianFormField m_try = m;
        for (int halving = 0; halving < 30; ++halving, s *= 0.5) {
            for (std::size_t i = 0; i < psi.size(); ++i) psi_try[i] = psi[i] + s * eta[i];
            ddc_into(m_try, m0_class, m0_potential + psi_try);
            if (!eval_residual(m_try, log_target, options.eig_floor, res_try)) {
                positivity_blocked = true;
                continue;
            }
            positivity_blocked = false;
            if (res_try.sup < res.sup || res_try.sup <= options.tol) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (positivity_blocked)
                throw ContinuationNeededError(
                    "solve_ma_newton: line search cannot maintain positivity");
            throw NoConvergenceError("solve_ma_newton: line search stalled");
        }

        psi = psi_try;
        const double drift = psi.mean();
        if (drift != 0.0) {
            psi += -drift;
            ddc_into(m_try, m0_class, m0_potential + psi);
            eval_residual(m_try, log_target, options.eig_floor, res_try);
        }
        m = m_try;
        res = res_try;
        solution.min_eig_series.push_back(res.min_eig);
    }

    solution.psi = psi;
    solution.residual_sup = res.sup;

    // Mass identity: Int wedge2(M) must match Int c_delta f wedge2(omega)
    // independently of psi (dd^c-exactness).
    std::vector<double> target(grid.node_count());
    for (std::size_t i = 0; i < target.size(); ++i)
        target[i] = problem.c_delta * problem.rhs_density[i] * w2_om[i];
    const double mass_lhs =
        ScalarField::compensated_sum(res.w2) / static_cast<double>(res.w2.size());
    const double mass_rhs =
        ScalarField::compensated_sum(target) / static_cast<double>(target.size());
    solution.mass_error_rel = std::abs(mass_lhs - mass_rhs) / std::abs(mass_rhs);
    return solution;
}

std::vector<double> default_delta_schedule() {
    std::vector<double> schedule;
    for (int k = 1; k <= 12; ++k) schedule.push_back(std::pow(0.5, k));
    return schedule;
}

std::pair<EllipticSolution, FamilyDiagnostics> solve_degenerate_family(
    const HermitianFormField& alpha, const HermitianFormField& omega,
    std::span<const double> delta_schedule, const ScalarField& rhs_density,
    const NewtonOptions& options, const std::optional<DegeneracySurrogate>& surrogate) {
    if (alpha.min_eig() < -1e-10)
        throw ConfigError("solve_degenerate_family: alpha must be semipositive");
    if (!(wedge2_const(alpha.class_part()) > 0.0))
        throw DegenerateClassError("solve_degenerate_family: [alpha]^2 must be positive");
    if (delta_schedule.empty()) throw ConfigError("solve_degenerate_family: empty schedule");
    for (std::size_t k = 0; k < delta_schedule.size(); ++k) {
        if (!(delta_schedule[k] > 0.0))
            throw ConfigError("solve_degenerate_family: deltas must be positive");
        if (k > 0 && !(delta_schedule[k] < delta_schedule[k - 1]))
            throw ConfigError("solve_degenerate_family: schedule must decrease");
    }
    if (surrogate) {
        require_same_grid(surrogate->weight.grid(), alpha.grid(), "degeneracy surrogate");
        if (surrogate->weight.min_value() < 0.0)
            throw ConfigError("degeneracy surrogate: weight must be nonnegative");
    }

    FamilyDiagnostics diagnostics;
    EllipticSolution solution{ScalarField::zero(alpha.grid()), 0.0, 0, {}, 0.0};
    ScalarField guess = ScalarField::zero(alpha.grid());
    ScalarField prev_psi = guess;

    for (std::size_t k = 0; k < delta_schedule.size(); ++k) {
        const double delta = delta_schedule[k];
        try {
            EllipticProblem problem(alpha, omega, delta, rhs_density);
            solution = solve_ma_newton(problem, guess, options);
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << "solve_degenerate_family: solve failed at delta = " << delta << ": "
                << e.what();
            throw Error(msg.str());
        }

        FamilyRecord record;
        record.delta = delta;
        record.c_delta = normalization_constant(alpha, omega, delta, rhs_density);
        record.sup_psi = solution.psi.sup_norm();
        record.newton_iters = solution.newton_iterations;
        if (k > 0) {
            double inc = 0.0;
            for (std::size_t i = 0; i < prev_psi.size(); ++i)
                inc = std::max(inc, std::abs(solution.psi[i] - prev_psi[i]));
            record.cauchy_increment = inc;
        }

        {
            HermitianFormField alpha_delta =
                alpha + delta * omega + ddc(solution.psi);
            ScalarField tr = trace_with(omega, alpha_delta);
            ScalarField tr_inv = trace_with(alpha_delta, omega);
            double cs = -1e300, gs = -1e300, csi = -1e300, gsi = -1e300;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                gs = std::max(gs, tr[i]);
                gsi = std::max(gsi, tr_inv[i]);
                const bool compact = !surrogate || surrogate->weight[i] >= surrogate->threshold;
                if (compact) {
                    cs = std::max(cs, tr[i]);
                    csi = std::max(csi, tr_inv[i]);
                }
            }
            record.compact_trace = cs;
            record.global_trace = gs;
            record.compact_trace_inv = csi;
            record.global_trace_inv = gsi;
        }

        diagnostics.records.push_back(record);
        prev_psi = solution.psi;
        guess = solution.psi;
    }

    return {solution, diagnostics};
}

TraceReport trace_diagnostic(const EllipticSolution& solution, const HermitianFormField& alpha,
                             const HermitianFormField& omega, double delta,
                             const DegeneracySurrogate& surrogate, double q_const_A,
                             double q_const_a) {
    require_same_grid(alpha.grid(), solution.psi.grid(), "trace_diagnostic");
    require_same_grid(alpha.grid(), surrogate.weight.grid(), "trace_diagnostic");

    HermitianFormField alpha_delta = alpha + delta * omega + ddc(solution.psi);
    ScalarField tr = trace_with(omega, alpha_delta);
    ScalarField tr_inv = trace_with(alpha_delta, omega);

    TraceReport report;
    double cs = -1e300, gs = -1e300, csi = -1e300, gsi = -1e300, qs = -1e300;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        gs = std::max(gs, tr[i]);
        gsi = std::max(gsi, tr_inv[i]);
        if (surrogate.weight[i] >= surrogate.threshold) {
            cs = std::max(cs, tr[i]);
            csi = std::max(csi, tr_inv[i]);
            const double q = std::log(tr[i]) -
                             q_const_A * (solution.psi[i] -
                                          q_const_a * std::log(surrogate.weight[i]));
            qs = std::max(qs, q);
        }
    }
    report.compact_sup_trace = cs;
    report.global_sup_trace = gs;
    report.compact_sup_inverse_trace = csi;
    report.global_sup_inverse_trace = gsi;
    report.q_sup = qs;
    return report;
}

ComparisonReport comparison_H_epsilon(const Trajectory& trajectory, const ScalarField& psi,
                                      double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("comparison_H_epsilon: epsilon must be positive");
    if (!trajectory.reference || trajectory.sup_diff_ref.empty())
        throw Error("comparison_H_epsilon: trajectory was not recorded against a reference");
    require_same_grid(trajectory.reference->grid(), psi.grid(), "comparison_H_epsilon");
    for (std::size_t i = 0; i < psi.size(); ++i)
        if ((*trajectory.reference)[i] != psi[i])
            throw Error("comparison_H_epsilon: psi differs from the recorded reference");

    ComparisonReport report;
    report.eps = eps;
    report.m_initial = trajectory.sup_diff_ref[0];
    report.l_initial = trajectory.inf_diff_ref[0];
    report.m_max = -1e300;
    report.l_min = 1e300;
    for (std::size_t k = 0; k < trajectory.time.size(); ++k) {
        const double t = trajectory.time[k];
        const double m = trajectory.sup_diff_ref[k] - eps * t;
        const double l = trajectory.inf_diff_ref[k] + eps * t;
        if (m > report.m_max) {
            report.m_max = m;
            report.argmax_time = t;
        }
        if (l < report.l_min) {
            report.l_min = l;
            report.argmin_time = t;
        }
    }
    return report;
}

double residual_ma(const ScalarField& psi, const HermitianFormField& alpha,
                   const HermitianFormField& omega, double c_target, const ScalarField& f) {
    require_same_grid(psi.grid(), alpha.grid(), "residual_ma");
    require_same_grid(psi.grid(), omega.grid(), "residual_ma");
    require_same_grid(psi.grid(), f.grid(), "residual_ma");
    HermitianFormField m = alpha + ddc(psi);
    ScalarField w2_m = wedge2(m);
    ScalarField w2_om = wedge2(omega);
    double sup = 0.0;
    for (std::size_t i = 0; i < w2_m.size(); ++i)
        sup = std::max(sup, std::abs(w2_m[i] - c_target * f[i] * w2_om[i]));
    return sup;
}

} // namespace jflow
