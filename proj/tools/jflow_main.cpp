#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "jflow/io.hpp"
#include "jflow/scenario.hpp"

namespace {

int cmd_validate(const std::string& path, bool strict) {
    jflow::ValidationReport report;
    try {
        jflow::parse_scenario(path, strict, &report);
    } catch (const jflow::ConfigError& e) {
        std::fprintf(stderr, "INVALID\n%s", e.what());
        return 1;
    }
    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("OK\n");
    return 0;
}

int cmd_run(const std::string& path, const std::string& out_dir, bool strict,
            const std::vector<std::string>& overrides) {
    jflow::ValidationReport report;
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "cannot read scenario file: %s\n", path.c_str());
        return 2;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();

    jflow::ScenarioConfig config;
    try {
        config = jflow::parse_scenario_text(buffer.str(), overrides, strict, &report);
    } catch (const jflow::ConfigError& e) {
        std::fprintf(stderr, "%s", e.what());
        return 2;
    }
    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    jflow::RunSummary summary;
    try {
        summary = jflow::run_scenario(config, out_dir);
    } catch (const jflow::Error& e) {
        std::fprintf(stderr, "stage error: %s\n", e.what());
        return 2;
    }

    std::printf("%s", summary.to_json().c_str());
    std::printf("wall_clock_sec: %s\n", jflow::format_double(summary.wall_clock_sec).c_str());
    return summary.passed() ? 0 : 1;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, double tol) {
    try {
        jflow::ScalarField a = jflow::read_field_dump(path_a);
        jflow::ScalarField b = jflow::read_field_dump(path_b);
        jflow::CompareVerdict v = jflow::compare_limits(a, b, tol);
        std::printf("sup_diff: %s\nstddev: %s\nverdict: %s\n",
                    jflow::format_double(v.sup_diff).c_str(),
                    jflow::format_double(v.stddev).c_str(), v.pass ? "PASS" : "FAIL");
        return v.pass ? 0 : 1;
    } catch (const jflow::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"jflow: J-flow and Monge-Ampere laboratory on the flat complex 2-torus"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir;
    bool strict = false;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run a scenario end to end");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory for CSV/JSON/field dumps");
    run->add_flag("--strict", strict, "unknown config keys are fatal");
    run->add_option("--override", overrides, "override config entries, e.g. flow.t_max=2.5");

    std::string validate_path;
    bool validate_strict = false;
    auto* validate = app.add_subcommand("validate", "parse and validate a scenario file");
    validate->add_option("scenario", validate_path, "scenario file")->required();
    validate->add_flag("--strict", validate_strict, "unknown config keys are fatal");

    std::string dump_a, dump_b;
    double tol = 1e-6;
    auto* compare = app.add_subcommand("compare", "compare two field dumps up to a constant");
    compare->add_option("a", dump_a, "first field dump")->required();
    compare->add_option("b", dump_b, "second field dump")->required();
    compare->add_option("--tol", tol, "sup-norm tolerance after gauge alignment");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(scenario_path, out_dir, strict, overrides);
    if (validate->parsed()) return cmd_validate(validate_path, validate_strict);
    if (compare->parsed()) return cmd_compare(dump_a, dump_b, tol);
    return 2;
}
