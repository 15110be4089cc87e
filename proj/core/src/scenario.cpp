#include "jflow/scenario.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "jflow/io.hpp"
#include "jflow/random.hpp"

namespace jflow {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Raw key/value map with consumption tracking so unknown keys surface as a
// complete list rather than one-at-a-time failures.
struct RawConfig {
    // section -> key -> value
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::set<std::string> consumed; // "section/key"
    std::vector<std::string>* errors = nullptr;

    bool has(const std::string& sec, const std::string& key) {
        auto s = sections.find(sec);
        return s != sections.end() && s->second.count(key) > 0;
    }

    std::optional<std::string> take(const std::string& sec, const std::string& key) {
        consumed.insert(sec + "/" + key);
        auto s = sections.find(sec);
        if (s == sections.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    void err(const std::string& msg) { errors->push_back(msg); }

    double take_real(const std::string& sec, const std::string& key, double fallback) {
        auto v = take(sec, key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            double x = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            err("[" + sec + "] " + key + ": not a real number: '" + *v + "'");
            return fallback;
        }
    }

    long take_int(const std::string& sec, const std::string& key, long fallback) {
        auto v = take(sec, key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            long x = std::stol(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            err("[" + sec + "] " + key + ": not an integer: '" + *v + "'");
            return fallback;
        }
    }

    bool take_bool(const std::string& sec, const std::string& key, bool fallback) {
        auto v = take(sec, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        err("[" + sec + "] " + key + ": not a boolean: '" + *v + "'");
        return fallback;
    }

    std::vector<double> take_real_list(const std::string& sec, const std::string& key) {
        auto v = take(sec, key);
        std::vector<double> out;
        if (!v) return out;
        for (const auto& tok : split_ws(*v)) {
            try {
                out.push_back(std::stod(tok));
            } catch (...) {
                err("[" + sec + "] " + key + ": not a real number: '" + tok + "'");
            }
        }
        return out;
    }
};

RawConfig parse_raw(const std::string& text, std::vector<std::string>& errors) {
    RawConfig raw;
    raw.errors = &errors;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                errors.push_back("line " + std::to_string(lineno) + ": empty section name");
            raw.sections[section]; // sections may legitimately be empty
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (section.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": key outside any section");
            continue;
        }
        if (!raw.sections[section].emplace(key, value).second)
            errors.push_back("line " + std::to_string(lineno) + ": duplicate key [" + section +
                             "] " + key);
    }
    return raw;
}

std::vector<FieldSpec::Mode> parse_modes(RawConfig& raw, const std::string& sec,
                                         const std::string& key, GridMode mode) {
    std::vector<FieldSpec::Mode> out;
    auto v = raw.take(sec, key);
    if (!v) return out;
    const std::size_t want = mode == GridMode::Reduced ? 4 : 6;
    for (const auto& group : split_on(*v, ';')) {
        auto toks = split_ws(group);
        if (toks.empty()) continue;
        if (toks.size() != want) {
            raw.err("[" + sec + "] " + key + ": each mode needs " + std::to_string(want) +
                    " numbers (got '" + trim(group) + "')");
            continue;
        }
        try {
            FieldSpec::Mode m;
            m.amplitude = std::stod(toks[0]);
            if (mode == GridMode::Reduced) {
                m.k[0] = std::stoi(toks[1]);
                m.k[1] = std::stoi(toks[2]);
                m.phase = std::stod(toks[3]);
            } else {
                for (int a = 0; a < 4; ++a) m.k[a] = std::stoi(toks[1 + a]);
                m.phase = std::stod(toks[5]);
            }
            out.push_back(m);
        } catch (...) {
            raw.err("[" + sec + "] " + key + ": malformed mode tuple '" + trim(group) + "'");
        }
    }
    return out;
}

std::vector<FieldSpec::CosPower> parse_cos_powers(RawConfig& raw, const std::string& sec,
                                                  const std::string& key) {
    std::vector<FieldSpec::CosPower> out;
    auto v = raw.take(sec, key);
    if (!v) return out;
    for (const auto& group : split_on(*v, ';')) {
        auto toks = split_ws(group);
        if (toks.empty()) continue;
        if (toks.size() != 3) {
            raw.err("[" + sec + "] " + key + ": each bump needs 'amplitude m1 m2'");
            continue;
        }
        try {
            out.push_back({std::stod(toks[0]), std::stoi(toks[1]), std::stoi(toks[2])});
        } catch (...) {
            raw.err("[" + sec + "] " + key + ": malformed bump '" + trim(group) + "'");
        }
    }
    return out;
}

Hermitian2 parse_matrix(RawConfig& raw, const std::string& sec, Hermitian2 fallback) {
    auto v = raw.take(sec, "matrix");
    if (!v) return fallback;
    auto toks = split_ws(*v);
    if (toks.size() != 4) {
        raw.err("[" + sec + "] matrix: expected 'a11 a22 re12 im12'");
        return fallback;
    }
    try {
        return Hermitian2{std::stod(toks[0]), std::stod(toks[1]),
                          {std::stod(toks[2]), std::stod(toks[3])}};
    } catch (...) {
        raw.err("[" + sec + "] matrix: malformed entry");
        return fallback;
    }
}

const std::set<std::string> kKnownSections = {"grid",       "omega",  "chi",
                                              "initial_phi", "flow",   "elliptic",
                                              "diagnostics", "output", "compare"};

} // namespace

ScalarField FieldSpec::realize(const Grid& grid) const {
    ScalarField out = ScalarField::constant(grid, constant);
    const double two_pi = 2.0 * std::numbers::pi;
    const double h = grid.spacing();
    const int rank = grid.rank();

    for (const auto& m : modes) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            auto ix = grid.unravel(i);
            double arg = m.phase;
            for (int a = 0; a < rank; ++a) arg += two_pi * m.k[a] * (ix[a] * h);
            out[i] += m.amplitude * std::cos(arg);
        }
    }
    for (const auto& cp : cos_powers) {
        // x1 and x2 are axes 0 and 1 in Reduced mode, 0 and 2 in Full mode.
        const int ax1 = 0;
        const int ax2 = grid.mode() == GridMode::Reduced ? 1 : 2;
        for (std::size_t i = 0; i < out.size(); ++i) {
            auto ix = grid.unravel(i);
            const double b1 = 0.5 * (1.0 + std::cos(two_pi * ix[ax1] * h));
            const double b2 = 0.5 * (1.0 + std::cos(two_pi * ix[ax2] * h));
            out[i] += cp.amplitude * std::pow(b1, cp.m1) * std::pow(b2, cp.m2);
        }
    }
    if (random) {
        out += random_band_limited(grid, random->band, random->count, random->amplitude,
                                   random->seed);
    }
    return out;
}

HermitianFormField MatrixSpec::realize(const Grid& grid) const {
    if (!potential || potential->trivial()) return HermitianFormField::constant(grid, matrix);
    return make_form(grid, matrix, potential->realize(grid));
}

std::string ValidationReport::joined() const {
    std::string out;
    for (const auto& e : errors) out += e + "\n";
    return out;
}

ScenarioConfig parse_scenario_text(const std::string& text,
                                   const std::vector<std::string>& overrides, bool strict,
                                   ValidationReport* report) {
    ValidationReport local;
    ValidationReport& rep = report ? *report : local;

    RawConfig raw = parse_raw(text, rep.errors);

    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        auto dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            rep.errors.push_back("override must look like section.key=value: '" + ov + "'");
            continue;
        }
        raw.sections[trim(ov.substr(0, dot))][trim(ov.substr(dot + 1, eq - dot - 1))] =
            trim(ov.substr(eq + 1));
    }

    ScenarioConfig cfg;

    // [grid] first: mode determines tuple arity everywhere else.
    if (auto mode = raw.take("grid", "mode")) {
        if (*mode == "reduced")
            cfg.mode = GridMode::Reduced;
        else if (*mode == "full")
            cfg.mode = GridMode::Full;
        else
            rep.errors.push_back("[grid] mode must be 'reduced' or 'full'");
    }
    cfg.resolution = static_cast<int>(raw.take_int("grid", "resolution", cfg.resolution));

    cfg.omega.matrix = parse_matrix(raw, "omega", Hermitian2::identity());
    if (auto m = parse_modes(raw, "omega", "potential_modes", cfg.mode); !m.empty()) {
        cfg.omega.potential = FieldSpec{};
        cfg.omega.potential->modes = m;
    }
    cfg.chi.matrix = parse_matrix(raw, "chi", 2.0 * Hermitian2::identity());
    if (auto m = parse_modes(raw, "chi", "potential_modes", cfg.mode); !m.empty()) {
        cfg.chi.potential = FieldSpec{};
        cfg.chi.potential->modes = m;
    }
    cfg.auto_normalize_c = raw.take_bool("chi", "auto_normalize_c", cfg.auto_normalize_c);

    if (auto kind = raw.take("initial_phi", "type")) {
        if (*kind == "zero")
            cfg.initial_kind = InitialPhiKind::Zero;
        else if (*kind == "modes")
            cfg.initial_kind = InitialPhiKind::Modes;
        else if (*kind == "random")
            cfg.initial_kind = InitialPhiKind::Random;
        else if (*kind == "file")
            cfg.initial_kind = InitialPhiKind::File;
        else
            rep.errors.push_back("[initial_phi] type must be zero|modes|random|file");
    }
    cfg.initial_phi.modes = parse_modes(raw, "initial_phi", "modes", cfg.mode);
    if (cfg.initial_kind == InitialPhiKind::Random) {
        FieldSpec::Random rnd;
        rnd.band = static_cast<int>(raw.take_int("initial_phi", "band", rnd.band));
        rnd.count = static_cast<int>(raw.take_int("initial_phi", "count", rnd.count));
        rnd.amplitude = raw.take_real("initial_phi", "amplitude", rnd.amplitude);
        rnd.seed = static_cast<std::uint64_t>(raw.take_int("initial_phi", "seed", 1));
        cfg.initial_phi.random = rnd;
    } else {
        raw.take("initial_phi", "band");
        raw.take("initial_phi", "count");
        raw.take("initial_phi", "amplitude");
        raw.take("initial_phi", "seed");
    }
    if (auto f = raw.take("initial_phi", "file")) cfg.initial_phi_file = *f;

    cfg.flow_enabled = raw.take_bool("flow", "enabled", cfg.flow_enabled);
    cfg.cfl_factor = raw.take_real("flow", "cfl_factor", cfg.cfl_factor);
    cfg.tol_stationary = raw.take_real("flow", "tol_stationary", cfg.tol_stationary);
    cfg.t_max = raw.take_real("flow", "t_max", cfg.t_max);
    cfg.sample_stride = static_cast<int>(raw.take_int("flow", "sample_stride", cfg.sample_stride));

    cfg.elliptic_enabled = raw.take_bool("elliptic", "enabled", cfg.elliptic_enabled);
    if (auto sched = raw.take("elliptic", "delta_schedule")) {
        if (*sched == "default") {
            cfg.delta_schedule = default_delta_schedule();
        } else {
            std::vector<double> deltas;
            for (const auto& tok : split_ws(*sched)) {
                try {
                    deltas.push_back(std::stod(tok));
                } catch (...) {
                    rep.errors.push_back("[elliptic] delta_schedule: bad entry '" + tok + "'");
                }
            }
            cfg.delta_schedule = deltas;
        }
    }
    cfg.tol_newton = raw.take_real("elliptic", "tol_newton", cfg.tol_newton);
    cfg.newton_max_iter =
        static_cast<int>(raw.take_int("elliptic", "max_iter", cfg.newton_max_iter));
    cfg.rhs.constant = raw.take_real("elliptic", "rhs_constant", 0.0);
    cfg.rhs.modes = parse_modes(raw, "elliptic", "rhs_modes", cfg.mode);
    cfg.rhs.cos_powers = parse_cos_powers(raw, "elliptic", "rhs_cos_powers");

    cfg.h_epsilon = raw.take_real_list("diagnostics", "h_epsilon");
    cfg.h_slack = raw.take_real("diagnostics", "h_slack", cfg.h_slack);
    cfg.gradient_check = raw.take_bool("diagnostics", "gradient_check", cfg.gradient_check);
    cfg.gradient_directions = static_cast<int>(
        raw.take_int("diagnostics", "gradient_directions", cfg.gradient_directions));
    cfg.gradient_h = raw.take_real("diagnostics", "gradient_h", cfg.gradient_h);
    cfg.gradient_tol = raw.take_real("diagnostics", "gradient_tol", cfg.gradient_tol);
    cfg.gradient_seed =
        static_cast<std::uint64_t>(raw.take_int("diagnostics", "gradient_seed", 2026));
    cfg.trace_enabled = raw.take_bool("diagnostics", "trace", cfg.trace_enabled);
    cfg.surrogate_weight.constant = raw.take_real("diagnostics", "surrogate_constant", 0.0);
    cfg.surrogate_weight.modes = parse_modes(raw, "diagnostics", "surrogate_modes", cfg.mode);
    cfg.surrogate_threshold =
        raw.take_real("diagnostics", "surrogate_threshold", cfg.surrogate_threshold);
    cfg.trace_q_A = raw.take_real("diagnostics", "q_const_A", cfg.trace_q_A);
    cfg.trace_q_a = raw.take_real("diagnostics", "q_const_a", cfg.trace_q_a);
    cfg.trace_compact_band =
        raw.take_real("diagnostics", "trace_compact_band", cfg.trace_compact_band);

    cfg.snapshot_stride =
        static_cast<int>(raw.take_int("output", "snapshot_stride", cfg.snapshot_stride));
    cfg.write_fields = raw.take_bool("output", "write_fields", cfg.write_fields);

    cfg.compare_tolerance = raw.take_real("compare", "tolerance", cfg.compare_tolerance);

    // Unknown keys: fatal under --strict, warnings otherwise.
    for (const auto& [sec, keys] : raw.sections) {
        if (!kKnownSections.count(sec)) {
            std::string msg = "unknown section [" + sec + "]";
            (strict ? rep.errors : rep.warnings).push_back(msg);
            continue;
        }
        for (const auto& [key, _] : keys) {
            if (!raw.consumed.count(sec + "/" + key)) {
                std::string msg = "unknown key [" + sec + "] " + key;
                (strict ? rep.errors : rep.warnings).push_back(msg);
            }
        }
    }

    // Semantic checks run even when syntax errors exist, so the caller sees
    // the full violation list in one pass (typed fields fall back to defaults).
    ValidationReport semantic = validate_scenario(cfg);
    rep.errors.insert(rep.errors.end(), semantic.errors.begin(), semantic.errors.end());
    rep.warnings.insert(rep.warnings.end(), semantic.warnings.begin(), semantic.warnings.end());
    if (!rep.errors.empty()) throw ConfigError("invalid scenario:\n" + rep.joined());
    return cfg;
}

ScenarioConfig parse_scenario_text(const std::string& text, bool strict,
                                   ValidationReport* report) {
    return parse_scenario_text(text, {}, strict, report);
}

ScenarioConfig parse_scenario(const std::string& path, bool strict, ValidationReport* report) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read scenario file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str(), strict, report);
}

ValidationReport validate_scenario(const ScenarioConfig& cfg) {
    ValidationReport rep;

    if (cfg.resolution < 8) rep.errors.push_back("[grid] resolution must be >= 8");
    if (cfg.resolution >= 8 && (cfg.resolution & (cfg.resolution - 1)) != 0)
        rep.errors.push_back("[grid] resolution must be a power of two");
    if (!rep.errors.empty()) return rep; // field realization needs a valid grid

    Grid grid(cfg.mode, cfg.resolution);

    const int max_mode = cfg.resolution / 2;
    const int band = cfg.resolution / 4;
    auto check_modes = [&](const std::vector<FieldSpec::Mode>& modes, const std::string& where) {
        for (const auto& m : modes)
            for (int a = 0; a < 4; ++a) {
                if (std::abs(m.k[a]) >= max_mode)
                    rep.errors.push_back(where + ": wavevector beyond the grid Nyquist");
                else if (std::abs(m.k[a]) >= band)
                    rep.warnings.push_back(where +
                                           ": wavevector at or above resolution/4; products may alias");
            }
    };
    if (cfg.omega.potential) check_modes(cfg.omega.potential->modes, "[omega] potential_modes");
    if (cfg.chi.potential) check_modes(cfg.chi.potential->modes, "[chi] potential_modes");
    check_modes(cfg.initial_phi.modes, "[initial_phi] modes");
    check_modes(cfg.rhs.modes, "[elliptic] rhs_modes");

    HermitianFormField omega = cfg.omega.realize(grid);
    if (!(omega.min_eig() > 0.0)) rep.errors.push_back("[omega] must be positive definite");

    HermitianFormField chi = cfg.chi.realize(grid);
    double c = 0.0;
    try {
        c = topological_constant(chi, omega);
    } catch (const Error& e) {
        rep.errors.push_back(std::string("[chi] ") + e.what());
        return rep;
    }
    if (cfg.auto_normalize_c && c > 0.0) chi *= 1.0 / c;

    if (!(chi.min_eig() > 0.0))
        rep.errors.push_back("[chi] must be positive definite (after normalization)");

    if (cfg.auto_normalize_c) {
        const double c_after = topological_constant(chi, omega);
        if (std::abs(c_after - 1.0) > 1e-12)
            rep.errors.push_back("auto-normalization failed to reach c = 1");
    } else if (cfg.flow_enabled && std::abs(c - 1.0) > 1e-12) {
        rep.errors.push_back(
            "flow stage needs the c = 1 normalization; set auto_normalize_c or rescale chi");
    }

    // Standing hypothesis: chi - omega >= 0 (up to rounding).
    const double alpha_min = (chi - omega).min_eig();
    if (alpha_min < -1e-10)
        rep.errors.push_back("hypothesis violated: min eig(chi - omega) = " +
                             format_double(alpha_min) + " < 0");

    if (cfg.initial_kind == InitialPhiKind::File && cfg.initial_phi_file.empty())
        rep.errors.push_back("[initial_phi] type = file requires a file path");

    if (cfg.flow_enabled && cfg.initial_kind != InitialPhiKind::File) {
        ScalarField phi0 = cfg.initial_kind == InitialPhiKind::Zero
                               ? ScalarField::zero(grid)
                               : cfg.initial_phi.realize(grid);
        HermitianFormField chi_phi0 = chi + ddc(phi0);
        if (chi_phi0.min_eig() < 0.05 * chi.min_eig())
            rep.errors.push_back("initial phi violates the admissible-cone margin "
                                 "(min eig chi_phi0 < 0.05 min eig chi)");
    }

    if (cfg.flow_enabled) {
        if (!(cfg.cfl_factor > 0.0)) rep.errors.push_back("[flow] cfl_factor must be positive");
        if (!(cfg.tol_stationary > 0.0))
            rep.errors.push_back("[flow] tol_stationary must be positive");
        if (!(cfg.t_max > 0.0)) rep.errors.push_back("[flow] t_max must be positive");
        if (cfg.sample_stride < 1) rep.errors.push_back("[flow] sample_stride must be >= 1");
    }

    if (cfg.elliptic_enabled) {
        ScalarField f = cfg.rhs.trivial() ? ScalarField::constant(grid, 1.0) : cfg.rhs.realize(grid);
        if (!(f.min_value() > 0.0))
            rep.errors.push_back("[elliptic] rhs density must be strictly positive "
                                 "(the solver works on log densities)");
        if (!(cfg.tol_newton > 0.0)) rep.errors.push_back("[elliptic] tol_newton must be positive");
        if (cfg.delta_schedule) {
            const auto& d = *cfg.delta_schedule;
            if (d.empty()) rep.errors.push_back("[elliptic] delta_schedule is empty");
            for (std::size_t k = 0; k < d.size(); ++k) {
                if (!(d[k] > 0.0))
                    rep.errors.push_back("[elliptic] delta_schedule entries must be positive");
                if (k > 0 && !(d[k] < d[k - 1]))
                    rep.errors.push_back("[elliptic] delta_schedule must strictly decrease");
            }
        }
    }

    for (double eps : cfg.h_epsilon)
        if (!(eps > 0.0)) rep.errors.push_back("[diagnostics] h_epsilon entries must be positive");
    if (!cfg.h_epsilon.empty() && !(cfg.flow_enabled && cfg.elliptic_enabled))
        rep.errors.push_back("[diagnostics] h_epsilon needs both the flow and elliptic stages");
    if (cfg.trace_enabled) {
        if (!cfg.elliptic_enabled)
            rep.errors.push_back("[diagnostics] trace needs the elliptic stage");
        ScalarField w = cfg.surrogate_weight.realize(grid);
        if (w.min_value() < 0.0)
            rep.errors.push_back("[diagnostics] surrogate weight must be nonnegative");
        if (cfg.surrogate_threshold < 0.0)
            rep.errors.push_back("[diagnostics] surrogate_threshold must be nonnegative");
    }
    if (cfg.gradient_check) {
        if (cfg.gradient_directions < 1)
            rep.errors.push_back("[diagnostics] gradient_directions must be >= 1");
        if (!(cfg.gradient_h > 0.0))
            rep.errors.push_back("[diagnostics] gradient_h must be positive");
    }
    return rep;
}

std::string ScenarioConfig::canonical_text() const {
    std::ostringstream out;
    auto real = [](double v) { return format_double(v); };
    out << "[grid]\nmode = " << (mode == GridMode::Reduced ? "reduced" : "full")
        << "\nresolution = " << resolution << "\n";

    auto emit_matrix = [&](const char* name, const MatrixSpec& m) {
        out << "[" << name << "]\nmatrix = " << real(m.matrix.a11) << " " << real(m.matrix.a22)
            << " " << real(m.matrix.a12.real()) << " " << real(m.matrix.a12.imag()) << "\n";
        if (m.potential)
            for (const auto& md : m.potential->modes)
                out << "mode " << real(md.amplitude) << " " << md.k[0] << " " << md.k[1] << " "
                    << md.k[2] << " " << md.k[3] << " " << real(md.phase) << "\n";
    };
    emit_matrix("omega", omega);
    emit_matrix("chi", chi);
    out << "auto_normalize_c = " << auto_normalize_c << "\n";

    out << "[initial_phi]\ntype = " << static_cast<int>(initial_kind) << "\n";
    for (const auto& md : initial_phi.modes)
        out << "mode " << real(md.amplitude) << " " << md.k[0] << " " << md.k[1] << " " << md.k[2]
            << " " << md.k[3] << " " << real(md.phase) << "\n";
    if (initial_phi.random)
        out << "random " << initial_phi.random->band << " " << initial_phi.random->count << " "
            << real(initial_phi.random->amplitude) << " " << initial_phi.random->seed << "\n";
    if (!initial_phi_file.empty()) out << "file = " << initial_phi_file << "\n";

    out << "[flow]\nenabled = " << flow_enabled << "\ncfl_factor = " << real(cfl_factor)
        << "\ntol_stationary = " << real(tol_stationary) << "\nt_max = " << real(t_max)
        << "\nsample_stride = " << sample_stride << "\n";

    out << "[elliptic]\nenabled = " << elliptic_enabled << "\ntol_newton = " << real(tol_newton)
        << "\nmax_iter = " << newton_max_iter << "\n";
    if (delta_schedule) {
        out << "delta_schedule =";
        for (double d : *delta_schedule) out << " " << real(d);
        out << "\n";
    }
    out << "rhs_constant = " << real(rhs.constant) << "\n";
    for (const auto& md : rhs.modes)
        out << "rhs_mode " << real(md.amplitude) << " " << md.k[0] << " " << md.k[1] << " "
            << md.k[2] << " " << md.k[3] << " " << real(md.phase) << "\n";
    for (const auto& cp : rhs.cos_powers)
        out << "rhs_cos_power " << real(cp.amplitude) << " " << cp.m1 << " " << cp.m2 << "\n";

    out << "[diagnostics]\nh_epsilon =";
    for (double e : h_epsilon) out << " " << real(e);
    out << "\nh_slack = " << real(h_slack) << "\ngradient_check = " << gradient_check
        << "\ngradient_directions = " << gradient_directions << "\ngradient_h = " << real(gradient_h)
        << "\ngradient_tol = " << real(gradient_tol) << "\ngradient_seed = " << gradient_seed
        << "\ntrace = " << trace_enabled << "\nsurrogate_constant = "
        << real(surrogate_weight.constant) << "\n";
    for (const auto& md : surrogate_weight.modes)
        out << "surrogate_mode " << real(md.amplitude) << " " << md.k[0] << " " << md.k[1] << " "
            << md.k[2] << " " << md.k[3] << " " << real(md.phase) << "\n";
    out << "surrogate_threshold = " << real(surrogate_threshold) << "\nq_const_A = "
        << real(trace_q_A) << "\nq_const_a = " << real(trace_q_a)
        << "\ntrace_compact_band = " << real(trace_compact_band) << "\n";

    out << "[output]\nsnapshot_stride = " << snapshot_stride << "\nwrite_fields = " << write_fields
        << "\n[compare]\ntolerance = " << real(compare_tolerance) << "\n";
    return out.str();
}

CompareVerdict compare_limits(const ScalarField& flow_phi, const ScalarField& elliptic_psi,
                              double tol, const HermitianFormField* chi) {
    require_same_grid(flow_phi.grid(), elliptic_psi.grid(), "compare_limits");

    const double mean_a = flow_phi.mean();
    const double mean_b = elliptic_psi.mean();
    double sup = 0.0;
    double sum_sq = 0.0;
    std::vector<double> sq(flow_phi.size());
    for (std::size_t i = 0; i < flow_phi.size(); ++i) {
        const double d = (flow_phi[i] - mean_a) - (elliptic_psi[i] - mean_b);
        sup = std::max(sup, std::abs(d));
        sq[i] = d * d;
    }
    sum_sq = ScalarField::compensated_sum(sq);

    CompareVerdict v;
    v.sup_diff = sup;
    v.stddev = std::sqrt(sum_sq / static_cast<double>(flow_phi.size()));
    if (chi) {
        v.I_a = functional_I(flow_phi, *chi);
        v.I_b = functional_I(elliptic_psi, *chi);
    }
    v.pass = sup <= tol;
    return v;
}

std::string RunSummary::to_json() const {
    json j;
    j["scenario"] = scenario_hash;
    j["status"] = status;
    j["I0"] = I0;
    j["I_end"] = I_end;
    j["J0"] = J0;
    j["J_end"] = J_end;
    j["residual"] = residual;
    json v = json::object();
    for (const auto& [name, ok] : verdicts) v[name] = ok;
    j["verdicts"] = v;
    json m = json::object();
    for (const auto& [name, value] : metrics) m[name] = value;
    j["metrics"] = m;
    return j.dump(2) + "\n";
}

namespace {

// Max relative gap between central differences of J and the variational
// density paired against random band-limited directions. A direction can
// pair almost orthogonally with the density, so the gap is measured against
// the larger of the pairing itself and its Cauchy-Schwarz scale
// ||eta||_2 ||density||_2.
double gradient_check_error(const ScalarField& phi, const HermitianFormField& chi,
                            const HermitianFormField& omega, int directions, double h,
                            std::uint64_t seed) {
    const Grid& grid = phi.grid();
    const ScalarField density = variational_derivative_J(phi, chi, omega);
    const int band = std::max(1, std::min(4, grid.resolution() / 4 - 1));
    const std::size_t n = phi.size();

    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = density[i] * density[i];
    const double density_l2 =
        std::sqrt(ScalarField::compensated_sum(sq) / static_cast<double>(n));

    double worst = 0.0;
    for (int d = 0; d < directions; ++d) {
        ScalarField eta = random_band_limited(grid, band, 5, 1.0, seed + 977 * d);
        ScalarField plus = phi, minus = phi;
        for (std::size_t i = 0; i < n; ++i) {
            plus[i] += h * eta[i];
            minus[i] -= h * eta[i];
        }
        const double fd =
            (functional_J(plus, chi, omega) - functional_J(minus, chi, omega)) / (2.0 * h);
        std::vector<double> prod(n);
        for (std::size_t i = 0; i < n; ++i) prod[i] = eta[i] * density[i];
        const double analytic =
            ScalarField::compensated_sum(prod) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) sq[i] = eta[i] * eta[i];
        const double eta_l2 =
            std::sqrt(ScalarField::compensated_sum(sq) / static_cast<double>(n));
        const double scale = std::max({std::abs(analytic), eta_l2 * density_l2, 1e-12});
        worst = std::max(worst, std::abs(fd - analytic) / scale);
    }
    return worst;
}

} // namespace

RunSummary run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    // Re-verify: programmatic configs get the same gate as parsed ones.
    ValidationReport rep = validate_scenario(cfg);
    if (!rep.ok()) throw ConfigError("invalid scenario:\n" + rep.joined());

    const auto t_start = std::chrono::steady_clock::now();
    const bool write = !out_dir.empty();
    namespace fs = std::filesystem;
    if (write) fs::create_directories(out_dir);

    Grid grid(cfg.mode, cfg.resolution);
    HermitianFormField omega = cfg.omega.realize(grid);
    HermitianFormField chi = cfg.chi.realize(grid);
    if (cfg.auto_normalize_c) chi *= 1.0 / topological_constant(chi, omega);

    ScalarField phi0 = ScalarField::zero(grid);
    switch (cfg.initial_kind) {
        case InitialPhiKind::Zero: break;
        case InitialPhiKind::Modes:
        case InitialPhiKind::Random: phi0 = cfg.initial_phi.realize(grid); break;
        case InitialPhiKind::File: phi0 = read_field_dump(cfg.initial_phi_file); break;
    }
    require_same_grid(phi0.grid(), grid, "initial phi");

    RunSummary summary;
    summary.scenario_hash = hex64(fnv1a(cfg.canonical_text()));

    // ---- Elliptic stage -------------------------------------------------
    std::optional<EllipticSolution> elliptic;
    std::optional<FamilyDiagnostics> family;
    if (cfg.elliptic_enabled) {
        HermitianFormField alpha = chi - omega;
        ScalarField f =
            cfg.rhs.trivial() ? ScalarField::constant(grid, 1.0) : cfg.rhs.realize(grid);
        NewtonOptions options;
        options.tol = cfg.tol_newton;
        options.max_iter = cfg.newton_max_iter;

        std::optional<DegeneracySurrogate> surrogate;
        if (cfg.trace_enabled)
            surrogate = DegeneracySurrogate{cfg.surrogate_weight.realize(grid),
                                            cfg.surrogate_threshold};

        if (cfg.delta_schedule) {
            auto [sol, diag] =
                solve_degenerate_family(alpha, omega, *cfg.delta_schedule, f, options, surrogate);
            elliptic = sol;
            family = diag;
        } else {
            EllipticProblem problem(alpha, omega, 0.0, f);
            elliptic = solve_ma_newton(problem, ScalarField::zero(grid), options);
        }
        summary.metrics["elliptic_residual"] = elliptic->residual_sup;
        summary.metrics["elliptic_mass_error"] = elliptic->mass_error_rel;
        summary.residual = elliptic->residual_sup;

        if (family && cfg.trace_enabled) {
            const auto& recs = family->records;
            double cmax = -1e300, cmin = 1e300;
            bool inv_monotone = true;
            for (std::size_t k = 0; k < recs.size(); ++k) {
                cmax = std::max(cmax, recs[k].compact_trace);
                cmin = std::min(cmin, recs[k].compact_trace);
                if (k > 0 &&
                    recs[k].global_trace_inv < recs[k - 1].global_trace_inv * (1.0 - 1e-9))
                    inv_monotone = false;
            }
            summary.verdicts["trace_compact_band"] = (cmax - cmin) <= cfg.trace_compact_band * cmax;
            summary.verdicts["trace_global_inverse_monotone"] = inv_monotone;
            summary.metrics["trace_compact_variation"] = (cmax - cmin) / cmax;
        }

        if (write) {
            write_field_dump(out_dir + "/psi.jflb", elliptic->psi);
            if (family) {
                json records = json::array();
                for (const auto& r : family->records) {
                    json rec;
                    rec["delta"] = r.delta;
                    rec["c_delta"] = r.c_delta;
                    rec["sup_psi"] = r.sup_psi;
                    rec["cauchy_increment"] = r.cauchy_increment;
                    rec["newton_iters"] = r.newton_iters;
                    rec["compact_trace"] = r.compact_trace;
                    rec["global_trace"] = r.global_trace;
                    rec["compact_trace_inv"] = r.compact_trace_inv;
                    rec["global_trace_inv"] = r.global_trace_inv;
                    records.push_back(rec);
                }
                std::ofstream fam(out_dir + "/family.json");
                fam << records.dump(2) << "\n";
            }
        }
    }

    // ---- Flow stage ------------------------------------------------------
    std::optional<Trajectory> trajectory;
    if (cfg.flow_enabled) {
        FlowRunConfig run_cfg(FlowProblem{chi, omega, 1.0}, phi0);
        run_cfg.cfl_factor = cfg.cfl_factor;
        run_cfg.tol_stationary = cfg.tol_stationary;
        run_cfg.t_max = cfg.t_max;
        run_cfg.sample_stride = cfg.sample_stride;
        run_cfg.snapshot_stride = cfg.snapshot_stride;
        if (elliptic) run_cfg.reference = elliptic->psi;

        trajectory = run_flow(run_cfg);

        summary.I0 = trajectory->I.front();
        summary.I_end = trajectory->I.back();
        summary.J0 = trajectory->J.front();
        summary.J_end = trajectory->J.back();
        summary.residual = trajectory->sup_abs_rhs.back();
        switch (trajectory->status) {
            case FlowStatus::Converged: summary.status = "CONVERGED"; break;
            case FlowStatus::MaxTime: summary.status = "MAX_TIME"; break;
            case FlowStatus::PositivityFloor: summary.status = "POSITIVITY_FLOOR"; break;
        }

        if (write) {
            std::ofstream csv(out_dir + "/trajectory.csv");
            const bool with_heps = !cfg.h_epsilon.empty() && !trajectory->sup_diff_ref.empty();
            csv << "time,I,J,sup_abs_rhs,min_eig,sup_abs_phi,dt";
            if (with_heps) csv << ",H_eps";
            csv << "\n";
            const double eps0 = with_heps ? cfg.h_epsilon.front() : 0.0;
            for (std::size_t k = 0; k < trajectory->samples(); ++k) {
                csv << format_double(trajectory->time[k]) << "," << format_double(trajectory->I[k])
                    << "," << format_double(trajectory->J[k]) << ","
                    << format_double(trajectory->sup_abs_rhs[k]) << ","
                    << format_double(trajectory->min_eig[k]) << ","
                    << format_double(trajectory->sup_abs_phi[k]) << ","
                    << format_double(trajectory->dt[k]);
                if (with_heps)
                    csv << ","
                        << format_double(trajectory->sup_diff_ref[k] -
                                         eps0 * trajectory->time[k]);
                csv << "\n";
            }
            if (cfg.write_fields) {
                write_field_dump(out_dir + "/phi_final.jflb", *trajectory->terminal_phi);
                for (std::size_t s = 0; s < trajectory->snapshots.size(); ++s)
                    write_field_dump(out_dir + "/phi_snapshot_" + std::to_string(s) + ".jflb",
                                     trajectory->snapshots[s].second);
            }
        }
    } else {
        summary.status = "ELLIPTIC_ONLY";
        if (elliptic) {
            summary.I0 = summary.I_end = functional_I(elliptic->psi, chi);
            summary.J0 = summary.J_end = functional_J(elliptic->psi, chi, omega);
        }
    }

    // ---- Comparisons and diagnostics --------------------------------------
    if (trajectory && elliptic) {
        CompareVerdict v = compare_limits(*trajectory->terminal_phi, elliptic->psi,
                                          cfg.compare_tolerance, &chi);
        summary.verdicts["flow_elliptic_compare"] = v.pass;
        summary.metrics["flow_elliptic_sup_diff"] = v.sup_diff;
        summary.metrics["flow_elliptic_stddev"] = v.stddev;

        for (double eps : cfg.h_epsilon) {
            ComparisonReport rep_eps = comparison_H_epsilon(*trajectory, elliptic->psi, eps);
            summary.verdicts["h_eps_" + format_double(eps)] = rep_eps.pass(cfg.h_slack);
        }
    }
    if (cfg.gradient_check) {
        const double err = gradient_check_error(phi0, chi, omega, cfg.gradient_directions,
                                                cfg.gradient_h, cfg.gradient_seed);
        summary.verdicts["gradient_check"] = err <= cfg.gradient_tol;
        summary.metrics["gradient_check_error"] = err;
    }

    summary.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (write) {
        std::ofstream js(out_dir + "/summary.json");
        js << summary.to_json();
    }
    return summary;
}

} // namespace jflow
