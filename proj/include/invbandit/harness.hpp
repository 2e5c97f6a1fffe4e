#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "invbandit/competitions.hpp"
#include "invbandit/core.hpp"
#include "invbandit/environments.hpp"

namespace invbandit {

// Flat key=value experiment description. Keys:
//   M, T, runs, seed, gamma (number or `auto`), model, env, affine (`a,b`),
//   competition (`fixed` or `switching:<k>`), output (path prefix; empty = no files).
//
// env is one of
//   swap:<gap>:<noise_width>              two halves, best arm swaps, best mean 0.25
//   piecewise:<noise_width>:<len>@<m1,m2,..>/<len>@...
//   scripted:<csv path>
struct ExperimentConfig {
    std::size_t M = 4;
    std::size_t T = 1000;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    std::optional<double> gamma;  // nullopt: sqrt of the model's complexity budget
    std::string model = "fixed";
    std::string env = "swap:0.5:0.2";
    std::optional<std::pair<double, double>> affine;
    std::string competition = "fixed";
    std::string output;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
// Applies one `key=value` assignment; throws ConfigError naming the key.
void apply_override(ExperimentConfig& config, std::string_view assignment);

struct Competition {
    std::size_t max_switches = 0;
    std::vector<Arm> path;
    std::vector<double> round_losses;  // loss of the path at each round
    double loss = 0.0;
};

// Parses `fixed` / `switching:<k>`.
std::size_t parse_competition(std::string_view spec);
Competition best_competition(const LossStream& stream, std::size_t max_switches);

// Builds the configured stream (affine wrapper included) from the config seed.
LossStream build_stream(const ExperimentConfig& config);

// D * sqrt(M * T) * (5 + 4 sqrt(W)).
double regret_bound(double range, std::size_t arms, std::size_t horizon, double complexity);

struct RunTrace {
    std::vector<Arm> arms;
    std::vector<double> losses;
    std::vector<double> etas;  // NaN while the learning rate is undefined
    std::vector<double> epsilons;
    std::vector<double> psis;
    std::vector<double> final_p;
    double final_regret = 0.0;
};

struct RegretReport {
    std::vector<double> mean_regret;    // index t = 0..T
    std::vector<double> stderr_regret;  // index t = 0..T
    std::vector<double> bound;          // index t = 0..T
    double final_mean = 0.0;
    double final_stderr = 0.0;
    double bound_value = 0.0;
    double complexity = 0.0;
    double range = 0.0;
    double gamma = 0.0;
    bool bound_satisfied = false;  // final_mean + 2 * final_stderr <= bound_value
    Competition competition;
};

struct ExperimentResult {
    RegretReport report;
    std::vector<RunTrace> runs;
};

// Runs every Monte Carlo replicate (in parallel) against one fixed stream.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const LossStream& stream);

void write_runs_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const RegretReport& report);

}  // namespace invbandit
