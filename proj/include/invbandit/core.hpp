#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invbandit/competitions.hpp"
#include "invbandit/rng.hpp"

namespace invbandit {

using Arm = std::size_t;  // 0-based

// Learning rate; std::nullopt while V + D^2 == 0 (no loss variation seen yet).
using Rate = std::optional<double>;

// Log-domain weights over the equivalence classes, plus the class -> arm map.
class ClassWeights {
public:
    ClassWeights() = default;
    ClassWeights(std::vector<double> log_weights, std::vector<Arm> arm_of, std::size_t arms);

    // Prior weights of a competition model.
    static ClassWeights from_prior(const CompetitionModel& model);

    std::size_t class_count() const { return log_w_.size(); }
    std::size_t arm_count() const { return arms_; }
    Arm arm_of(std::size_t cls) const { return arm_of_[cls]; }
    std::span<const Arm> arm_map() const { return arm_of_; }

    std::span<const double> log_weights() const { return log_w_; }
    std::span<double> log_weights() { return log_w_; }

    // Subtracts the largest log-weight; returns the amount removed.
    double renormalize();

private:
    std::vector<double> log_w_;
    std::vector<Arm> arm_of_;
    std::size_t arms_ = 0;
};

// p: algorithmic probabilities; q: selection probabilities after uniform mixing.
struct ArmDistribution {
    std::vector<double> p;
    std::vector<double> q;
};

struct AdaptiveState {
    std::size_t t = 1;  // round about to be played
    double psi = std::numeric_limits<double>::infinity();
    double V = 0.0;
    double D = 0.0;
    Rate eta_prev;  // eta_{t-1}
    double gamma = 1.0;
    std::size_t arms = 2;
};

// Importance-weighted translated loss of the selected arm; every other arm is 0.
struct PerformanceMeasure {
    double phi = 0.0;
    Arm selected = 0;
    double selection_prob = 1.0;
};

struct MeasuredRound {
    PerformanceMeasure measure;
    double psi = 0.0;
};

// min(1/2, sqrt(M / t)).
double mixture_coefficient(std::size_t t, std::size_t arms);

// q_m = (1 - eps) p_m + eps / M.
std::vector<double> selection_probabilities(std::span<const double> p, double eps);

// Normalized per-arm sums of class weights, via max-shifted exponentials.
std::vector<double> arm_marginals(const ClassWeights& w);

// Inverse CDF over arms in ascending order for a uniform draw u in [0, 1).
Arm sample_arm(std::span<const double> q, double u);
Arm sample_arm(std::span<const double> q, Rng& rng);

MeasuredRound performance_measure(double loss, Arm selected, double q_sel, double psi_prev);

// v_t = p_sel * phi^2 and d_t = phi; accumulates V and takes the running max D.
AdaptiveState update_statistics(AdaptiveState state, const PerformanceMeasure& pm, double p_sel);

// gamma / sqrt(V + D^2), or nullopt when the denominator is zero.
Rate learning_rate(const AdaptiveState& state);

// log z = log w - eta * phi on the selected arm's classes.
std::vector<double> exponential_update(const ClassWeights& w, const PerformanceMeasure& pm,
                                       double eta);

struct SharedWeights {
    std::vector<double> log_w;  // unnormalized next-round log-weights
    double log_mass_in = 0.0;   // log sum_lambda z^power
    double log_mass_out = 0.0;  // log sum_lambda w_next
};

// w_next = sum_prev T(next | prev) z_prev^power, in log space.
SharedWeights weight_share(std::span<const double> log_z, const CompetitionModel& model,
                           double power);

struct Selection {
    Arm arm = 0;
    std::vector<double> q;
    double epsilon = 0.0;
};

// Everything one update() produced, for tracing and checks.
struct RoundRecord {
    std::size_t t = 0;
    Arm arm = 0;
    double loss = 0.0;
    double phi = 0.0;
    double psi = 0.0;
    double epsilon = 0.0;
    Rate eta;          // eta_t
    double power = 1.0;
    double log_mass_in = 0.0;
    double log_mass_out = 0.0;
};

struct BanditOptions {
    double gamma = 1.0;
    // Forces eta_t to this value every round (power is then always 1).
    std::optional<double> constant_eta;
};

// Full algorithm state with a two-phase round protocol: select() then update(loss).
class Bandit {
public:
    Bandit(ModelPtr model, BanditOptions options, Rng rng = Rng{});

    Selection select();
    // Same as select() but consumes the given uniform draw instead of the RNG.
    Selection select_with_draw(double u);
    // Plays a fixed arm; q is still reported and used for the performance measure.
    Selection select_arm(Arm arm);

    RoundRecord update(double loss);

    // One full round; `loss_of` is queried only for the selected arm.
    RoundRecord step(const std::function<double(Arm)>& loss_of);

    bool awaiting_update() const { return pending_.has_value(); }

    const CompetitionModel& model() const { return *model_; }
    const ModelPtr& model_ptr() const { return model_; }
    const AdaptiveState& state() const { return state_; }
    const ClassWeights& weights() const { return weights_; }
    std::span<const double> p() const { return p_; }
    const BanditOptions& options() const { return options_; }
    const Rng& rng() const { return rng_; }
    std::size_t arm_count() const { return state_.arms; }

    // Versioned JSON snapshot; doubles are written as hex floats so that
    // restore() reproduces the state bit for bit.
    std::string snapshot() const;
    static Bandit restore(const std::string& text);

private:
    struct Pending {
        Arm arm;
        double q_sel;
        double p_sel;
        double epsilon;
    };

    Bandit() = default;
    Selection make_selection(Arm arm, std::vector<double> q, double eps);
    std::vector<double> current_q(double eps) const;

    ModelPtr model_;
    BanditOptions options_;
    Rng rng_;
    ClassWeights weights_;
    std::vector<double> p_;
    AdaptiveState state_;
    std::optional<Pending> pending_;
};

}  // namespace invbandit
