#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "invbandit/competitions.hpp"
#include "invbandit/core.hpp"
#include "invbandit/environments.hpp"
#include "invbandit/rng.hpp"

namespace invbandit {

// One round of the dense reference, captured after the update.
struct OracleRound {
    std::vector<double> p;  // p_t used for the selection
    std::vector<double> q;  // q_t
    double psi = 0.0;
    double V = 0.0;
    double D = 0.0;
    Rate eta;
    double power = 1.0;
    double mass_in = 0.0;            // sum_lambda z^power
    double mass_out = 0.0;           // sum_lambda w_next, before rescaling
    std::vector<double> weights;     // w_{t+1}, rescaled to sum 1
};

struct OracleTrajectory {
    std::vector<OracleRound> rounds;
};

// Literal linear-domain transcription of the round: full phi vector over all
// arms, explicit expectations and max/min, nested transition sums. Arms are
// chosen by the caller so it can follow the same path as the optimized core.
class DenseReference {
public:
    DenseReference(const CompetitionModel& model, double gamma,
                   std::optional<double> constant_eta = std::nullopt);

    // Probabilities for the round about to be played.
    const std::vector<double>& p() const { return p_; }
    std::size_t round() const { return t_; }

    // Optional fault injection for negative-control tests: replaces the
    // sharing exponent eta_t / eta_{t-1} with the returned value.
    void set_power_override(double (*override_fn)(double)) { power_override_ = override_fn; }

    OracleRound step(Arm arm, double loss);

private:
    const CompetitionModel& model_;
    double gamma_;
    std::optional<double> constant_eta_;
    std::vector<double> w_;
    std::vector<double> p_;
    std::size_t t_ = 1;
    double psi_;
    double V_ = 0.0;
    double D_ = 0.0;
    Rate eta_prev_;
    double (*power_override_)(double) = nullptr;
};

OracleTrajectory dense_reference_run(const CompetitionModel& model, double gamma,
                                     std::span<const Arm> arms, std::span<const double> losses,
                                     std::optional<double> constant_eta = std::nullopt);

// Constant-learning-rate mixture over every class sequence: for round t,
// p_t[m] is proportional to the sum over class sequences ending in a class of
// arm m of T(sequence) * exp(-eta * sum_{tau<t} phi_tau), with phi computed
// along the scripted (arm, loss) path from the oracle's own q_tau.
// Returns p_1 .. p_T. Rejects more than 2^20 sequences at the final round.
std::vector<std::vector<double>> sequence_mixture_oracle(const CompetitionModel& model,
                                                         std::span<const Arm> arms,
                                                         std::span<const double> losses,
                                                         double eta);

struct FixedArmResult {
    Arm arm = 0;
    double loss = 0.0;
};

// Lowest cumulative loss over constant paths; ties go to the lower arm.
FixedArmResult best_fixed_arm(const LossStream& stream);

struct SwitchingResult {
    std::vector<Arm> path;
    double loss = 0.0;
};

// Lowest cumulative loss over paths with at most `max_switches` arm changes;
// among optimal paths, the lexicographically smallest.
SwitchingResult best_switching_sequence(const LossStream& stream, std::size_t max_switches);

// Exhaustive counterpart of best_switching_sequence, for tests (M^T paths).
SwitchingResult best_switching_sequence_exhaustive(const LossStream& stream,
                                                   std::size_t max_switches);

// Exp3 on losses rescaled from a declared range [low, high] into [0, 1].
// Not scale-free: a loss outside the declared range is a ConfigError.
class Exp3 {
public:
    enum class Schedule { kConstant, kAnytime };

    struct Options {
        double low = 0.0;
        double high = 1.0;
        Schedule schedule = Schedule::kAnytime;
        double eta = 0.1;  // used by kConstant
    };

    Exp3(std::size_t arms, Options options, Rng rng);

    Arm select();
    void update(double loss);

    std::vector<double> probabilities() const;
    double current_eta() const;

private:
    std::size_t arms_;
    Options options_;
    Rng rng_;
    std::vector<double> estimated_loss_;  // cumulative importance-weighted, in [0,1] units
    std::size_t t_ = 1;
    std::optional<Arm> pending_;
    double pending_prob_ = 0.0;
};

struct Exp3Trajectory {
    std::vector<Arm> arms;
    std::vector<double> final_p;
};

Exp3Trajectory exp3_baseline(const LossStream& stream, Exp3::Options options, Rng rng);

}  // namespace invbandit
