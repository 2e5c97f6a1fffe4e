#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace invbandit {

// Equivalence-class competition model: the class set (constant size across
// rounds), the projection of each class onto the arm it recommends now, the
// prior over the first round's classes, and the row-stochastic transition
// weights used for probability sharing between consecutive rounds.
//
// Classes and arms are 0-based.
class CompetitionModel {
public:
    virtual ~CompetitionModel() = default;

    virtual std::size_t arm_count() const = 0;
    virtual std::size_t class_count() const = 0;
    virtual std::size_t arm_of(std::size_t cls) const = 0;
    virtual double prior(std::size_t cls) const = 0;
    // Weight of moving from class `prev` to class `next`.
    virtual double transition(std::size_t next, std::size_t prev) const = 0;
    // Configuration string this model was parsed from (`fixed`, `switching:<alpha>`).
    virtual std::string spec() const = 0;

    // log w_next[j] = log sum_i T(j|i) exp(log_mass[i]).
    // The base version is the dense O(C^2) sum; models with structure override it.
    virtual std::vector<double> propagate(std::span<const double> log_mass) const;

    // Largest complexity over realizable class paths of length `horizon`
    // with at most `switches` arm changes. The base version is an exact
    // dynamic program; closed forms override it.
    virtual double complexity_budget(std::size_t horizon, std::size_t switches) const;

    // Throws ContractError unless the prior and every transition row sum to 1
    // within 1e-12 and every arm owns at least one class.
    void validate() const;
};

using ModelPtr = std::shared_ptr<const CompetitionModel>;

// Competes against the best constant arm: identity transitions.
class FixedArmModel final : public CompetitionModel {
public:
    explicit FixedArmModel(std::size_t arms);

    std::size_t arm_count() const override { return arms_; }
    std::size_t class_count() const override { return arms_; }
    std::size_t arm_of(std::size_t cls) const override { return cls; }
    double prior(std::size_t) const override { return 1.0 / static_cast<double>(arms_); }
    double transition(std::size_t next, std::size_t prev) const override {
        return next == prev ? 1.0 : 0.0;
    }
    std::string spec() const override { return "fixed"; }

    std::vector<double> propagate(std::span<const double> log_mass) const override;
    double complexity_budget(std::size_t horizon, std::size_t switches) const override;

private:
    std::size_t arms_;
};

// Fixed-share switching model: keep the arm with probability 1 - alpha,
// otherwise move to one of the other M - 1 arms uniformly.
class FixedShareModel final : public CompetitionModel {
public:
    FixedShareModel(std::size_t arms, double alpha);

    std::size_t arm_count() const override { return arms_; }
    std::size_t class_count() const override { return arms_; }
    std::size_t arm_of(std::size_t cls) const override { return cls; }
    double prior(std::size_t) const override { return 1.0 / static_cast<double>(arms_); }
    double transition(std::size_t next, std::size_t prev) const override {
        return next == prev ? stay_ : spread_;
    }
    std::string spec() const override;

    double alpha() const { return alpha_; }

    // O(M): w_next[m] = (1-alpha) y[m] + alpha/(M-1) * sum_{j != m} y[j].
    std::vector<double> propagate(std::span<const double> log_mass) const override;
    double complexity_budget(std::size_t horizon, std::size_t switches) const override;

private:
    std::size_t arms_;
    double alpha_;
    double stay_;
    double spread_;
};

// Arbitrary dense model, mainly for tests: several classes may share an arm.
class DenseModel final : public CompetitionModel {
public:
    // transitions[next][prev]
    DenseModel(std::vector<std::size_t> arm_of, std::vector<double> prior,
               std::vector<std::vector<double>> transitions);

    std::size_t arm_count() const override { return arms_; }
    std::size_t class_count() const override { return arm_of_.size(); }
    std::size_t arm_of(std::size_t cls) const override { return arm_of_.at(cls); }
    double prior(std::size_t cls) const override { return prior_.at(cls); }
    double transition(std::size_t next, std::size_t prev) const override {
        return transitions_.at(next).at(prev);
    }
    std::string spec() const override { return "dense"; }

private:
    std::vector<std::size_t> arm_of_;
    std::vector<double> prior_;
    std::vector<std::vector<double>> transitions_;
    std::size_t arms_ = 0;
};

std::shared_ptr<FixedArmModel> fixed_arm_model(std::size_t arms);
std::shared_ptr<FixedShareModel> fixed_share_model(std::size_t arms, double alpha);

// `fixed` or `switching:<alpha>` with alpha in (0, 1).
ModelPtr parse_model(std::string_view spec, std::size_t arms);

// W = log(max_{1<=t<=T} |Omega_{t-1}|) - log T(path), with |Omega_0| = 1 and
// T(lambda_1 | lambda_0) = prior(lambda_1). +inf when the path is not realizable.
double complexity(const CompetitionModel& model, std::span<const std::size_t> path);

// Number of arm changes along a class path.
std::size_t switch_count(const CompetitionModel& model, std::span<const std::size_t> path);

}  // namespace invbandit

namespace invbandit {

inline double complexity_budget(const CompetitionModel& model, std::size_t horizon,
                                std::size_t switches) {
    return model.complexity_budget(horizon, switches);
}

}  // namespace invbandit
