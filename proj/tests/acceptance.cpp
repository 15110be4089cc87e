// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavy canonical runs are shared across criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "jflow/elliptic.hpp"
#include "jflow/random.hpp"
#include "jflow/scenario.hpp"

using namespace jflow;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = kPi * kPi;

int g_failures = 0;

void report(int number, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d [%-28s] %s  %s\n", number, name, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), pattern, args...);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Canonical scenarios at resolution 64 (reduced): a flat background, a
// cosine-density background, and a curved-chi background, each with a
// closed-form critical potential.

struct CanonicalRun {
    std::string name;
    HermitianFormField chi;
    HermitianFormField omega;
    EllipticSolution elliptic;
    Trajectory trajectory;
    ScalarField closed_form; // expected critical potential, mean-zero gauge
};

CanonicalRun make_run(const std::string& name, HermitianFormField chi, HermitianFormField omega,
                      ScalarField phi0, ScalarField closed_form) {
    NewtonOptions newton;
    EllipticProblem problem(chi - omega, omega, 0.0,
                            ScalarField::constant(phi0.grid(), 1.0));
    EllipticSolution psi = solve_ma_newton(problem, ScalarField::zero(phi0.grid()), newton);

    FlowRunConfig cfg(FlowProblem{chi, omega, 1.0}, std::move(phi0));
    cfg.tol_stationary = 1e-9;
    cfg.t_max = 60.0;
    cfg.reference = psi.psi;
    Trajectory traj = run_flow(cfg);

    return CanonicalRun{name, std::move(chi), std::move(omega), std::move(psi), std::move(traj),
                        std::move(closed_form)};
}

std::vector<CanonicalRun> canonical_runs(const Grid& g) {
    std::vector<CanonicalRun> runs;
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    auto two_id = HermitianFormField::constant(g, 2.0 * Hermitian2::identity());

    // A: flat background; the limit is a constant.
    runs.push_back(make_run(
        "flat", two_id, id,
        ScalarField::sample(g,
                            [](double x1, double, double x2, double) {
                                return 0.05 * std::cos(2.0 * kPi * x1) +
                                       0.02 * std::cos(2.0 * kPi * x2);
                            }),
        ScalarField::zero(g)));

    // B: omega = diag(1 + 0.1 cos(2 pi x1), 1): the critical equation is the
    // cosine-density Monge-Ampere problem, psi = -(0.2/pi^2) cos(2 pi x1).
    {
        ScalarField w = ScalarField::sample(g, [](double x1, double, double, double) {
            return -(0.1 / kPi2) * std::cos(2.0 * kPi * x1);
        });
        HermitianFormField omega_b = make_form(g, Hermitian2::identity(), w);
        ScalarField closed = ScalarField::sample(g, [](double x1, double, double, double) {
            return -(0.2 / kPi2) * std::cos(2.0 * kPi * x1);
        });
        runs.push_back(make_run("cosine", two_id, omega_b, ScalarField::zero(g), closed));
    }

    // C: chi = 2 id + ddc(u): the limit is -u up to a constant.
    {
        ScalarField u = ScalarField::sample(g, [](double x1, double, double x2, double) {
            return (0.04 / kPi2) * std::cos(2.0 * kPi * (x1 + x2)) +
                   (0.02 / kPi2) * std::cos(2.0 * kPi * x2);
        });
        HermitianFormField chi_c = make_form(g, 2.0 * Hermitian2::identity(), u);
        ScalarField closed(g);
        for (std::size_t i = 0; i < closed.size(); ++i) closed[i] = -u[i];
        runs.push_back(make_run("curved", chi_c, id, ScalarField::zero(g), closed));
    }
    return runs;
}

// ---------------------------------------------------------------------------

void criterion_1(const Grid& g) {
    auto t0 = std::chrono::steady_clock::now();
    double max_rewrite = 0.0, max_polar = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        HermitianFormField chi =
            make_form(g, 2.0 * Hermitian2::identity(), random_band_limited(g, 8, 5, 0.05, 3000 + rep));
        HermitianFormField omega =
            make_form(g, Hermitian2::identity(), random_band_limited(g, 8, 5, 0.03, 3200 + rep));
        ScalarField phi = random_band_limited(g, 8, 6, 0.05, 3400 + rep);

        max_rewrite = std::max(max_rewrite, rhs_rewrite_check(phi, chi, omega));

        HermitianFormField chi_phi = chi + ddc(phi);
        ScalarField lhs = wedge2(chi_phi + omega);
        ScalarField w2a = wedge2(chi_phi), w2b = wedge2(omega), w11 = wedge11(chi_phi, omega);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            max_polar = std::max(max_polar,
                                 std::abs(lhs[i] - (w2a[i] + 2.0 * w11[i] + w2b[i])));
    }
    const double rt = seconds_since(t0);
    const bool ok = max_rewrite <= 1e-12 && max_polar <= 1e-12 && rt < 10.0;
    report(1, "algebraic identities", ok,
           fmt("rewrite<=%.2e polarization<=%.2e on 100 states, runtime %.1fs (<10s)",
               max_rewrite, max_polar, rt));
}

void criterion_2(const Grid& g) {
    auto t0 = std::chrono::steady_clock::now();
    double worst_drift = 0.0, worst_j_violation = 0.0, worst_energy = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        HermitianFormField chi =
            make_form(g, 2.0 * Hermitian2::identity(), random_band_limited(g, 6, 4, 0.05, 4000 + rep));
        HermitianFormField omega =
            make_form(g, Hermitian2::identity(), random_band_limited(g, 6, 4, 0.03, 4100 + rep));
        FlowRunConfig cfg(FlowProblem{std::move(chi), std::move(omega), 1.0},
                          random_band_limited(g, 6, 5, 0.04, 4200 + rep));
        cfg.tol_stationary = 1e-9;
        cfg.t_max = 1.5;
        Trajectory traj = run_flow(cfg);

        const double I0 = traj.I.front();
        for (double v : traj.I)
            worst_drift = std::max(worst_drift, std::abs(v - I0) / (1.0 + std::abs(I0)));
        for (std::size_t k = 1; k < traj.samples(); ++k)
            worst_j_violation = std::max(worst_j_violation, traj.J[k] - traj.J[k - 1]);
        for (std::size_t k = 0; k < traj.samples(); ++k)
            worst_energy =
                std::max(worst_energy, std::abs(traj.J[k] - traj.J.front() + traj.dissipation[k]));
    }
    const double rt = seconds_since(t0);
    const bool ok = worst_drift <= 1e-6 && worst_j_violation <= 1e-8 && worst_energy <= 1e-6 &&
                    rt < 300.0;
    report(2, "conservation/monotonicity", ok,
           fmt("I-drift<=%.2e J-increase<=%.2e energy<=%.2e on 10 runs, runtime %.0fs (<300s)",
               worst_drift, worst_j_violation, worst_energy, rt));
}

void criterion_3(const std::vector<CanonicalRun>& runs) {
    bool ok = true;
    std::string detail;
    for (const auto& run : runs) {
        const bool converged = run.trajectory.status == FlowStatus::Converged;
        CompareVerdict v =
            compare_limits(*run.trajectory.terminal_phi, run.elliptic.psi, 1e-6, &run.chi);
        double closed_err = 0.0;
        for (std::size_t i = 0; i < run.elliptic.psi.size(); ++i)
            closed_err =
                std::max(closed_err, std::abs(run.elliptic.psi[i] - run.closed_form[i]));
        ok = ok && converged && v.pass && closed_err <= 1e-8;
        detail += fmt("%s: sup=%.2e closed=%.2e; ", run.name.c_str(), v.sup_diff, closed_err);
    }
    report(3, "flow/elliptic oracle match", ok, detail);
}

std::pair<Trajectory, Trajectory> criterion_4(const Grid& g, const CanonicalRun& cosine_run) {
    ScalarField a = ScalarField::sample(
        g, [](double, double, double x2, double) { return 0.04 * std::cos(2.0 * kPi * x2); });
    ScalarField b = ScalarField::sample(
        g, [](double, double, double x2, double) { return 0.04 * std::sin(2.0 * kPi * x2); });

    auto run_one = [&](ScalarField phi0) {
        FlowRunConfig cfg(FlowProblem{cosine_run.chi, cosine_run.omega, 1.0}, std::move(phi0));
        cfg.tol_stationary = 1e-9;
        cfg.t_max = 60.0;
        cfg.reference = cosine_run.elliptic.psi;
        return run_flow(cfg);
    };
    Trajectory ta = run_one(a);
    Trajectory tb = run_one(b);

    const double dI = std::abs(ta.I.front() - tb.I.front());
    double sup = 0.0;
    for (std::size_t i = 0; i < ta.terminal_phi->size(); ++i)
        sup = std::max(sup, std::abs((*ta.terminal_phi)[i] - (*tb.terminal_phi)[i]));
    const bool ok = ta.status == FlowStatus::Converged && tb.status == FlowStatus::Converged &&
                    dI < 1e-12 && sup <= 1e-6;
    report(4, "uniqueness of the limit", ok,
           fmt("|I_a - I_b|=%.2e terminal sup diff=%.2e (<=1e-6)", dI, sup));
    return {std::move(ta), std::move(tb)};
}

void criterion_5(const std::vector<CanonicalRun>& runs, const Trajectory& ua,
                 const Trajectory& ub, const ScalarField& psi_cosine) {
    bool ok = true;
    double worst_gap = 0.0;
    int checked = 0;
    auto check = [&](const Trajectory& traj, const ScalarField& psi) {
        if (traj.status != FlowStatus::Converged) return;
        for (double eps : {1e-2, 1e-3}) {
            ComparisonReport rep = comparison_H_epsilon(traj, psi, eps);
            ok = ok && rep.pass(1e-7);
            worst_gap = std::max({worst_gap, rep.m_max - rep.m_initial,
                                  rep.l_initial - rep.l_min});
            ++checked;
        }
    };
    for (const auto& run : runs) check(run.trajectory, run.elliptic.psi);
    check(ua, psi_cosine);
    check(ub, psi_cosine);
    report(5, "comparison principle H_eps", ok,
           fmt("max excursion above t=0 value %.2e (slack 1e-7) over %d checks", worst_gap,
               checked));
}

void criterion_6() {
    auto t0 = std::chrono::steady_clock::now();
    Grid g(GridMode::Reduced, 128);
    const double s = 3.0;

    // Degenerate slice: alpha = s (id + ddc(u)), u = (s/pi^2) cos(2 pi x1),
    // so alpha_11 = s (1 - cos 2 pi x1) vanishes exactly on x1 = 0; a
    // sharpened cosine-power bump drives the family away from the trivial
    // delta-independent solution.
    ScalarField u = ScalarField::sample(g, [s](double x1, double, double, double) {
        return (s / kPi2) * std::cos(2.0 * kPi * x1);
    });
    HermitianFormField alpha = make_form(g, s * Hermitian2::identity(), u);
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    ScalarField f = ScalarField::sample(g, [](double x1, double, double x2, double) {
        const double b1 = 0.5 * (1.0 + std::cos(2.0 * kPi * x1));
        const double b2 = 0.5 * (1.0 + std::cos(2.0 * kPi * x2));
        return 1.0 + 8.0 * std::pow(b1, 8) * std::pow(b2, 8);
    });
    DegeneracySurrogate surrogate{ScalarField::sample(g,
                                                      [](double x1, double, double, double) {
                                                          const double sn = std::sin(kPi * x1);
                                                          return sn * sn;
                                                      }),
                                  0.1};

    auto schedule = default_delta_schedule();
    auto [sol, diag] =
        solve_degenerate_family(alpha, id, schedule, f, NewtonOptions{}, surrogate);
    const auto& recs = diag.records;

    // (a) c_delta closed form (s + delta)^2 / <f>, <f> = 1 + 8 (C(16,8)/4^8)^2.
    const double c8 = 12870.0 / 65536.0;
    const double f_mean = 1.0 + 8.0 * c8 * c8;
    double c_err = 0.0;
    for (const auto& r : recs) {
        const double closed = (s + r.delta) * (s + r.delta) / f_mean;
        c_err = std::max(c_err, std::abs(r.c_delta - closed) / closed);
    }

    // (b) fixed band for sup|psi_delta|.
    double band_lo = 1e300, band_hi = 0.0;
    for (const auto& r : recs) {
        band_lo = std::min(band_lo, r.sup_psi);
        band_hi = std::max(band_hi, r.sup_psi);
    }

    // (c) Cauchy increments decrease monotonically.
    bool increments_monotone = true;
    for (std::size_t k = 2; k < recs.size(); ++k)
        increments_monotone =
            increments_monotone && recs[k].cauchy_increment < recs[k - 1].cauchy_increment;

    // (d) compact-subset trace varies within 20%.
    double cmax = 0.0, cmin = 1e300;
    for (const auto& r : recs) {
        cmax = std::max(cmax, r.compact_trace);
        cmin = std::min(cmin, r.compact_trace);
    }
    const double compact_variation = (cmax - cmin) / cmax;

    // (e) the globally growing trace: on the torus alpha_delta scales like
    // (s + delta), so tr_omega(alpha_delta) shrinks as delta drops while the
    // inverse trace tr_{alpha_delta}(omega) grows; monotone growth is
    // asserted on the latter (both series are reported).
    bool inverse_monotone = true;
    bool direct_monotone = true;
    for (std::size_t k = 1; k < recs.size(); ++k) {
        inverse_monotone = inverse_monotone &&
                           recs[k].global_trace_inv >= recs[k - 1].global_trace_inv * (1.0 - 1e-9);
        direct_monotone =
            direct_monotone && recs[k].global_trace >= recs[k - 1].global_trace * (1.0 - 1e-9);
    }

    const double rt = seconds_since(t0);
    const bool ok = c_err <= 1e-12 && band_hi <= 2.0 * band_lo && increments_monotone &&
                    compact_variation <= 0.2 && inverse_monotone && rt < 600.0;
    report(6, "regularized family", ok,
           fmt("c_delta err<=%.1e band [%.3f,%.3f] increments %s compact var %.3f "
               "inverse-trace %s (direct trace %s: %.2f->%.2f) runtime %.0fs (<600s)",
               c_err, band_lo, band_hi, increments_monotone ? "monotone" : "NOT monotone",
               compact_variation, inverse_monotone ? "grows monotonically" : "NOT monotone",
               direct_monotone ? "also grows" : "shrinks", recs.front().global_trace,
               recs.back().global_trace, rt));
}

void criterion_7(const Grid& g) {
    HermitianFormField chi =
        make_form(g, 2.0 * Hermitian2::identity(), random_band_limited(g, 6, 4, 0.05, 7000));
    HermitianFormField omega =
        make_form(g, Hermitian2::identity(), random_band_limited(g, 6, 4, 0.03, 7001));
    ScalarField phi = random_band_limited(g, 6, 5, 0.05, 7002);
    ScalarField density = variational_derivative_J(phi, chi, omega);

    std::vector<double> sq(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) sq[i] = density[i] * density[i];
    const double density_l2 =
        std::sqrt(ScalarField::compensated_sum(sq) / static_cast<double>(sq.size()));

    const double h = 1e-5;
    double worst = 0.0;
    for (int d = 0; d < 20; ++d) {
        ScalarField eta = random_band_limited(g, 6, 5, 1.0, 7100 + d);
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
        for (std::size_t i = 0; i < phi.size(); ++i) sq[i] = eta[i] * eta[i];
        const double eta_l2 =
            std::sqrt(ScalarField::compensated_sum(sq) / static_cast<double>(sq.size()));
        const double scale = std::max(std::abs(analytic), eta_l2 * density_l2);
        worst = std::max(worst, std::abs(fd - analytic) / scale);
    }
    report(7, "gradient check", worst <= 1e-6,
           fmt("max relative gap %.2e over 20 directions at h=1e-5 (<=1e-6)", worst));
}

void criterion_8() {
    // RK4 local error ratio against a dt/8 reference.
    Grid g16(GridMode::Reduced, 16);
    FlowProblem problem{HermitianFormField::constant(g16, 2.0 * Hermitian2::identity()),
                        HermitianFormField::constant(g16, Hermitian2::identity()), 1.0};
    ScalarField phi0 = ScalarField::sample(g16, [](double x1, double, double x2, double) {
        return 0.05 * std::cos(2.0 * kPi * x1) + 0.03 * std::cos(2.0 * kPi * (x1 + x2));
    });
    FlowState state = make_flow_state(problem, phi0);
    auto advance = [&](double dt, int n) {
        FlowState s = state;
        for (int k = 0; k < n; ++k) s = step(problem, s, dt);
        return s;
    };
    auto err_vs_ref = [&](double h) {
        FlowState coarse = advance(h, 1);
        FlowState ref = advance(h / 8.0, 8);
        double e = 0.0;
        for (std::size_t i = 0; i < coarse.phi.size(); ++i)
            e = std::max(e, std::abs(coarse.phi[i] - ref.phi[i]));
        return e;
    };
    const double rk4_ratio = err_vs_ref(1e-3) / err_vs_ref(5e-4);

    // Simpson ratio on the quadratic path with a resonant mode triple.
    Grid g32(GridMode::Reduced, 32);
    auto chi = HermitianFormField::constant(g32, 2.0 * Hermitian2::identity());
    auto omega = HermitianFormField::constant(g32, Hermitian2::identity());
    ScalarField phi = ScalarField::sample(g32, [](double x1, double, double x2, double) {
        return 0.05 * (std::cos(2.0 * kPi * x1) + std::cos(2.0 * kPi * x2) +
                       std::cos(2.0 * kPi * (x1 + x2)));
    });
    const double exact = functional_J(phi, chi, omega);
    const double simpson_ratio = std::abs(functional_J_path(phi, chi, omega, 8, 2) - exact) /
                                 std::abs(functional_J_path(phi, chi, omega, 16, 2) - exact);

    const bool ok = rk4_ratio >= 24.0 && rk4_ratio <= 40.0 && simpson_ratio >= 12.0 &&
                    simpson_ratio <= 20.0;
    report(8, "convergence orders", ok,
           fmt("RK4 Richardson ratio %.1f (in [24,40]), Simpson ratio %.1f (in [12,20])",
               rk4_ratio, simpson_ratio));
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    Grid g64(GridMode::Reduced, 64);

    criterion_1(g64);
    criterion_2(g64);

    std::vector<CanonicalRun> runs = canonical_runs(g64);
    criterion_3(runs);
    auto [ua, ub] = criterion_4(g64, runs[1]);
    criterion_5(runs, ua, ub, runs[1].elliptic.psi);
    criterion_6();
    criterion_7(g64);
    criterion_8();

    std::printf("acceptance: %d/8 criteria passed (total %.0fs)\n", 8 - g_failures,
                seconds_since(t0));
    return g_failures;
}
