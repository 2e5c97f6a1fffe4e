// Command-line front end: run experiments, self-verification, and the
// best-competition oracle on a loss CSV.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "invbandit/environments.hpp"
#include "invbandit/errors.hpp"
#include "invbandit/harness.hpp"
#include "invbandit/reference.hpp"
#include "invbandit/verify.hpp"

namespace {

using namespace invbandit;

void write_file(const std::string& path, auto&& writer) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    writer(out);
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    const ExperimentResult result = run_experiment(cfg);
    const RegretReport& rep = result.report;
    if (!cfg.output.empty()) {
        write_file(cfg.output + "_runs.csv", [&](std::ostream& o) { write_runs_csv(o, result); });
        write_file(cfg.output + "_summary.csv", [&](std::ostream& o) { write_summary_csv(o, rep); });
    }
    std::printf("runs           %zu\n", cfg.runs);
    std::printf("gamma          %.6g\n", rep.gamma);
    std::printf("range D        %.6g\n", rep.range);
    std::printf("complexity W   %.6g\n", rep.complexity);
    std::printf("comp. loss     %.6g\n", rep.competition.loss);
    std::printf("mean regret    %.6g +- %.3g (SE)\n", rep.final_mean, rep.final_stderr);
    std::printf("bound          %.6g  (%s)\n", rep.bound_value,
                rep.bound_satisfied ? "satisfied" : "VIOLATED");
    return 0;
}

int cmd_verify(const std::string& suite) {
    const auto checks = run_verify_suite(suite);
    print_checks(std::cout, checks);
    for (const auto& c : checks) {
        if (!c.passed) return 1;
    }
    return 0;
}

int cmd_oracle(const std::string& stream_path, std::size_t switches) {
    const LossStream stream = load_stream_csv(stream_path);
    const auto fixed = best_fixed_arm(stream);
    const auto best = best_switching_sequence(stream, switches);
    std::printf("# best fixed arm %zu, loss %.17g\n", fixed.arm + 1, fixed.loss);
    std::printf("# best path with <= %zu switches, loss %.17g\n", switches, best.loss);
    std::printf("t,arm\n");
    for (std::size_t t = 0; t < best.path.size(); ++t) std::printf("%zu,%zu\n", t, best.path[t] + 1);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scale-free adversarial bandit experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "Run a Monte Carlo regret experiment");
    run->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
    run->add_option("--override", overrides, "key=value replacing a config entry");

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "Run oracle, invariance and bound checks");
    verify->add_option("--suite", suite)->check(CLI::IsMember({"all", "oracle", "invariance", "bound"}));

    std::string stream_path;
    std::size_t switches = 0;
    auto* oracle = app.add_subcommand("oracle", "Best fixed arm and best k-switch path of a loss CSV");
    oracle->add_option("--stream", stream_path, "CSV with header t,arm,loss")->required();
    oracle->add_option("--switches", switches, "maximum number of switches")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, overrides);
        if (*verify) return cmd_verify(suite);
        if (*oracle) return cmd_oracle(stream_path, switches);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
