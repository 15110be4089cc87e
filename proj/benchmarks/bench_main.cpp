#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "jflow/elliptic.hpp"
#include "jflow/random.hpp"

using namespace jflow;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField smooth_potential(const Grid& g, double amp, std::uint64_t seed) {
    return random_band_limited(g, std::min(6, g.resolution() / 4 - 1), 5, amp, seed);
}

void BM_ddc_reduced(benchmark::State& state) {
    Grid g(GridMode::Reduced, static_cast<int>(state.range(0)));
    ScalarField u = smooth_potential(g, 0.05, 1);
    HermitianFormField out = ddc(u);
    for (auto _ : state) {
        ddc_into(out, Hermitian2::identity(), u);
        benchmark::DoNotOptimize(out.a11().data());
    }
}
BENCHMARK(BM_ddc_reduced)->Arg(64)->Arg(128);

void BM_ddc_full(benchmark::State& state) {
    Grid g(GridMode::Full, 8);
    ScalarField u = random_band_limited(g, 2, 5, 0.05, 2);
    HermitianFormField out = ddc(u);
    for (auto _ : state) {
        ddc_into(out, Hermitian2::identity(), u);
        benchmark::DoNotOptimize(out.a11().data());
    }
}
BENCHMARK(BM_ddc_full);

void BM_wedge2(benchmark::State& state) {
    Grid g(GridMode::Reduced, 128);
    HermitianFormField a = make_form(g, 2.0 * Hermitian2::identity(), smooth_potential(g, 0.05, 3));
    for (auto _ : state) {
        ScalarField w = wedge2(a);
        benchmark::DoNotOptimize(w.data());
    }
}
BENCHMARK(BM_wedge2);

void BM_flow_rhs(benchmark::State& state) {
    Grid g(GridMode::Reduced, static_cast<int>(state.range(0)));
    HermitianFormField chi =
        make_form(g, 2.0 * Hermitian2::identity(), smooth_potential(g, 0.05, 4));
    auto omega = HermitianFormField::constant(g, Hermitian2::identity());
    for (auto _ : state) {
        ScalarField rhs = flow_rhs_cached(chi, omega, 1.0);
        benchmark::DoNotOptimize(rhs.data());
    }
}
BENCHMARK(BM_flow_rhs)->Arg(64)->Arg(128);

void BM_rk4_step(benchmark::State& state) {
    Grid g(GridMode::Reduced, static_cast<int>(state.range(0)));
    FlowProblem problem{HermitianFormField::constant(g, 2.0 * Hermitian2::identity()),
                        HermitianFormField::constant(g, Hermitian2::identity()), 1.0};
    FlowState s = make_flow_state(problem, smooth_potential(g, 0.04, 5));
    for (auto _ : state) {
        FlowState next = step(problem, s, 1e-4);
        benchmark::DoNotOptimize(next.phi.data());
    }
}
BENCHMARK(BM_rk4_step)->Arg(64)->Arg(128);

void BM_newton_cosine(benchmark::State& state) {
    Grid g(GridMode::Reduced, static_cast<int>(state.range(0)));
    auto id = HermitianFormField::constant(g, Hermitian2::identity());
    ScalarField f = ScalarField::sample(g, [](double x1, double, double, double) {
        return 1.0 + 0.1 * std::cos(2.0 * kPi * x1);
    });
    EllipticProblem p(id, id, 0.0, f);
    for (auto _ : state) {
        EllipticSolution sol = solve_ma_newton(p, ScalarField::zero(g));
        benchmark::DoNotOptimize(sol.psi.data());
    }
}
BENCHMARK(BM_newton_cosine)->Arg(32)->Arg(64);

} // namespace

BENCHMARK_MAIN();
