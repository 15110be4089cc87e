#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jflow/elliptic.hpp"

namespace jflow {

// Declarative scenario configuration. The on-disk format is strict nested
// key/value text: `[section]` or `[section.sub]` headers and `key = value`
// lines, `#` comments. Canonical examples live in scenarios/.

// A scalar field built from a constant, a list of cosine modes, optional
// sharpened-cosine-power bumps, and an optional seeded random band-limited
// part. Mode tuples are "amplitude k1 k2 phase" in Reduced mode and
// "amplitude kx1 ky1 kx2 ky2 phase" in Full mode; wavevectors are integers.
struct FieldSpec {
    struct Mode {
        double amplitude = 0.0;
        int k[4] = {0, 0, 0, 0};
        double phase = 0.0;
    };
    // amplitude * ((1+cos 2 pi x1)/2)^m1 * ((1+cos 2 pi x2)/2)^m2
    struct CosPower {
        double amplitude = 0.0;
        int m1 = 0;
        int m2 = 0;
    };
    struct Random {
        int band = 4;
        int count = 6;
        double amplitude = 0.01;
        std::uint64_t seed = 1;
    };

    double constant = 0.0;
    std::vector<Mode> modes;
    std::vector<CosPower> cos_powers;
    std::optional<Random> random;

    bool trivial() const {
        return constant == 0.0 && modes.empty() && cos_powers.empty() && !random;
    }
    ScalarField realize(const Grid& grid) const;
};

// constant Hermitian matrix + optional dd^c(potential).
struct MatrixSpec {
    Hermitian2 matrix = Hermitian2::identity();
    std::optional<FieldSpec> potential;

    HermitianFormField realize(const Grid& grid) const;
};

enum class InitialPhiKind { Zero, Modes, Random, File };

struct ScenarioConfig {
    // [grid]
    GridMode mode = GridMode::Reduced;
    int resolution = 64;

    // [omega], [chi]
    MatrixSpec omega;
    MatrixSpec chi;
    bool auto_normalize_c = true; // rescale chi so the topological constant is 1

    // [initial_phi]
    InitialPhiKind initial_kind = InitialPhiKind::Zero;
    FieldSpec initial_phi;
    std::string initial_phi_file;

    // [flow]
    bool flow_enabled = true;
    double cfl_factor = 0.2;
    double tol_stationary = 1e-9;
    double t_max = 1e4;
    int sample_stride = 1;

    // [elliptic]
    bool elliptic_enabled = true;
    std::optional<std::vector<double>> delta_schedule; // absent -> direct delta = 0 solve
    double tol_newton = 1e-11;
    int newton_max_iter = 100;
    FieldSpec rhs; // defaults to f = 1

    // [diagnostics]
    std::vector<double> h_epsilon;
    double h_slack = 1e-7;
    bool gradient_check = false;
    int gradient_directions = 20;
    double gradient_h = 1e-5;
    double gradient_tol = 1e-6;
    std::uint64_t gradient_seed = 2026;
    bool trace_enabled = false;
    FieldSpec surrogate_weight;
    double surrogate_threshold = 0.1;
    double trace_q_A = 1.0;
    double trace_q_a = 1.0;
    double trace_compact_band = 0.2; // allowed relative variation of the compact trace

    // [output]
    int snapshot_stride = 0;
    bool write_fields = true;

    // [compare]
    double compare_tolerance = 1e-6;

    std::string canonical_text() const; // deterministic serialization (hash input)
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
    std::string joined() const;
};

// Parse + validate. Collects every violation rather than stopping at the
// first; throws ConfigError carrying the full list when invalid. Unknown
// keys are fatal in strict mode and warnings otherwise.
ScenarioConfig parse_scenario(const std::string& path, bool strict = false,
                              ValidationReport* report = nullptr);
ScenarioConfig parse_scenario_text(const std::string& text, bool strict = false,
                                   ValidationReport* report = nullptr);

// Dotted overrides ("flow.t_max=2.5") applied to the raw key/value map
// before typed extraction.
ScenarioConfig parse_scenario_text(const std::string& text,
                                   const std::vector<std::string>& overrides, bool strict,
                                   ValidationReport* report);

// Semantic validation of a (possibly programmatic) config; re-run before
// stage execution.
ValidationReport validate_scenario(const ScenarioConfig& config);

struct RunSummary {
    std::string scenario_hash;
    std::string status; // CONVERGED | MAX_TIME | POSITIVITY_FLOOR | ELLIPTIC_ONLY
    double I0 = 0.0;
    double I_end = 0.0;
    double J0 = 0.0;
    double J_end = 0.0;
    double residual = 0.0;
    std::map<std::string, bool> verdicts;
    std::map<std::string, double> metrics;
    double wall_clock_sec = 0.0; // reported on stdout, not serialized

    bool passed() const {
        for (const auto& [_, ok] : verdicts)
            if (!ok) return false;
        return true;
    }
    std::string to_json() const; // {scenario, status, I0, I_end, J0, J_end, residual, verdicts}
};

// Execute the configured stages (elliptic solve, flow run, comparisons) and
// write CSV/JSON/binary outputs under out_dir (no files when empty).
RunSummary run_scenario(const ScenarioConfig& config, const std::string& out_dir);

struct CompareVerdict {
    double sup_diff = 0.0;
    double stddev = 0.0;
    std::optional<double> I_a;
    std::optional<double> I_b;
    bool pass = false;
};

// Gauge-aligned comparison of two potentials: subtract means, report sup and
// standard deviation of the difference; PASS iff sup <= tol. When chi is
// supplied, also reports the I values of both potentials.
CompareVerdict compare_limits(const ScalarField& flow_phi, const ScalarField& elliptic_psi,
                              double tol, const HermitianFormField* chi = nullptr);

} // namespace jflow
