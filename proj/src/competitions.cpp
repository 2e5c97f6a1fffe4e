#include "invbandit/competitions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <system_error>

#include "invbandit/errors.hpp"
#include "invbandit/logspace.hpp"

namespace invbandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRowTolerance = 1e-12;

// log max_{1<=t<=T} |Omega_{t-1}| for a constant class set and |Omega_0| = 1.
double log_max_class_count(std::size_t classes, std::size_t horizon) {
    return horizon >= 2 ? std::log(static_cast<double>(classes)) : 0.0;
}

void require_arms(std::size_t arms) {
    if (arms < 2) throw ConfigError("competition model needs at least 2 arms");
}

}  // namespace

std::vector<double> CompetitionModel::propagate(std::span<const double> log_mass) const {
    const std::size_t classes = class_count();
    std::vector<double> out(classes, kNegInf);
    std::vector<double> terms(classes);
    for (std::size_t next = 0; next < classes; ++next) {
        for (std::size_t prev = 0; prev < classes; ++prev) {
            const double tr = transition(next, prev);
            terms[prev] = tr > 0.0 ? std::log(tr) + log_mass[prev] : kNegInf;
        }
        out[next] = log_sum_exp(terms);
    }
    return out;
}

double CompetitionModel::complexity_budget(std::size_t horizon, std::size_t switches) const {
    if (horizon == 0) throw ConfigError("complexity budget needs a horizon of at least 1");
    const std::size_t classes = class_count();
    const std::size_t max_switches = std::min(switches, horizon - 1);
    const std::size_t width = max_switches + 1;

    // best[j * classes + c]: smallest log path weight over realizable prefixes
    // ending in class c after exactly j arm changes.
    std::vector<double> best(width * classes, kInf);
    for (std::size_t c = 0; c < classes; ++c) {
        if (prior(c) > 0.0) best[c] = std::log(prior(c));
    }
    std::vector<double> next(best.size());
    for (std::size_t t = 1; t < horizon; ++t) {
        std::fill(next.begin(), next.end(), kInf);
        for (std::size_t j = 0; j < width; ++j) {
            for (std::size_t prev = 0; prev < classes; ++prev) {
                const double base = best[j * classes + prev];
                if (base == kInf) continue;
                for (std::size_t to = 0; to < classes; ++to) {
                    const double tr = transition(to, prev);
                    if (tr <= 0.0) continue;
                    const std::size_t nj = j + (arm_of(to) != arm_of(prev) ? 1 : 0);
                    if (nj >= width) continue;
                    double& slot = next[nj * classes + to];
                    slot = std::min(slot, base + std::log(tr));
                }
            }
        }
        best.swap(next);
    }
    const double lowest = *std::min_element(best.begin(), best.end());
    if (lowest == kInf) throw ContractError("no realizable competition path");
    return log_max_class_count(classes, horizon) - lowest;
}

void CompetitionModel::validate() const {
    const std::size_t classes = class_count();
    if (classes == 0) throw ContractError("competition model has an empty class set");
    double prior_sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (!(prior(c) >= 0.0)) throw ContractError("negative prior weight");
        prior_sum += prior(c);
    }
    if (std::abs(prior_sum - 1.0) > kRowTolerance)
        throw ContractError("prior does not sum to 1");
    for (std::size_t prev = 0; prev < classes; ++prev) {
        double row = 0.0;
        for (std::size_t next = 0; next < classes; ++next) {
            const double tr = transition(next, prev);
            if (!(tr >= 0.0 && tr <= 1.0)) throw ContractError("transition weight outside [0,1]");
            row += tr;
        }
        if (std::abs(row - 1.0) > kRowTolerance)
            throw ContractError("transition row " + std::to_string(prev) + " does not sum to 1");
    }
    std::vector<bool> covered(arm_count(), false);
    for (std::size_t c = 0; c < classes; ++c) {
        if (arm_of(c) >= arm_count()) throw ContractError("class maps to a nonexistent arm");
        covered[arm_of(c)] = true;
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
        throw ContractError("some arm has no equivalence class");
}

FixedArmModel::FixedArmModel(std::size_t arms) : arms_(arms) { require_arms(arms); }

std::vector<double> FixedArmModel::propagate(std::span<const double> log_mass) const {
    return {log_mass.begin(), log_mass.end()};
}

double FixedArmModel::complexity_budget(std::size_t horizon, std::size_t) const {
    if (horizon == 0) throw ConfigError("complexity budget needs a horizon of at least 1");
    return log_max_class_count(arms_, horizon) + std::log(static_cast<double>(arms_));
}

FixedShareModel::FixedShareModel(std::size_t arms, double alpha)
    : arms_(arms), alpha_(alpha), stay_(1.0 - alpha),
      spread_(alpha / static_cast<double>(arms - 1)) {
    require_arms(arms);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("switching alpha must lie in (0, 1)");
}

std::string FixedShareModel::spec() const {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, alpha_);
    return "switching:" + std::string(buf, res.ptr);
}

std::vector<double> FixedShareModel::propagate(std::span<const double> log_mass) const {
    const std::size_t m_count = log_mass.size();
    const double hi = *std::max_element(log_mass.begin(), log_mass.end());
    std::vector<double> out(m_count, kNegInf);
    if (hi == kNegInf) return out;

    std::vector<double> scaled(m_count);
    for (std::size_t m = 0; m < m_count; ++m) scaled[m] = std::exp(log_mass[m] - hi);
    // Exclusive sums from prefix/suffix scans: no cancellation when one arm dominates.
    std::vector<double> suffix(m_count + 1, 0.0);
    for (std::size_t m = m_count; m-- > 0;) suffix[m] = suffix[m + 1] + scaled[m];
    double prefix = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
        const double others = prefix + suffix[m + 1];
        out[m] = hi + std::log(stay_ * scaled[m] + spread_ * others);
        prefix += scaled[m];
    }
    return out;
}

double FixedShareModel::complexity_budget(std::size_t horizon, std::size_t switches) const {
    if (horizon == 0) throw ConfigError("complexity budget needs a horizon of at least 1");
    const double log_m = std::log(static_cast<double>(arms_));
    if (horizon == 1) return log_m;
    const std::size_t steps = horizon - 1;
    const std::size_t max_switches = std::min(switches, steps);
    const double switch_cost = -std::log(spread_);
    const double stay_cost = -std::log1p(-alpha_);
    // Linear in the switch count, so the maximum sits at an endpoint.
    double worst = -kInf;
    for (std::size_t j : {std::size_t{0}, max_switches}) {
        worst = std::max(worst, static_cast<double>(j) * switch_cost +
                                    static_cast<double>(steps - j) * stay_cost);
    }
    return 2.0 * log_m + worst;
}

DenseModel::DenseModel(std::vector<std::size_t> arm_of, std::vector<double> prior,
                       std::vector<std::vector<double>> transitions)
    : arm_of_(std::move(arm_of)), prior_(std::move(prior)), transitions_(std::move(transitions)) {
    if (arm_of_.empty()) throw ConfigError("dense model needs at least one class");
    if (prior_.size() != arm_of_.size() || transitions_.size() != arm_of_.size())
        throw ConfigError("dense model: prior/transition sizes do not match the class count");
    for (const auto& row : transitions_) {
        if (row.size() != arm_of_.size()) throw ConfigError("dense model: ragged transition matrix");
    }
    arms_ = *std::max_element(arm_of_.begin(), arm_of_.end()) + 1;
}

std::shared_ptr<FixedArmModel> fixed_arm_model(std::size_t arms) {
    return std::make_shared<FixedArmModel>(arms);
}

std::shared_ptr<FixedShareModel> fixed_share_model(std::size_t arms, double alpha) {
    return std::make_shared<FixedShareModel>(arms, alpha);
}

ModelPtr parse_model(std::string_view spec, std::size_t arms) {
    if (spec == "fixed") return fixed_arm_model(arms);
    constexpr std::string_view kSwitching = "switching:";
    if (spec.starts_with(kSwitching)) {
        const std::string_view text = spec.substr(kSwitching.size());
        double alpha = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), alpha);
        if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
            throw ConfigError("cannot parse switching alpha '" + std::string(text) + "'");
        return fixed_share_model(arms, alpha);
    }
    throw ConfigError("unknown competition model '" + std::string(spec) + "'");
}

double complexity(const CompetitionModel& model, std::span<const std::size_t> path) {
    if (path.empty()) throw ConfigError("complexity of an empty path");
    double log_weight = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        if (path[t] >= model.class_count()) throw ConfigError("path visits a nonexistent class");
        const double w = t == 0 ? model.prior(path[0]) : model.transition(path[t], path[t - 1]);
        if (w <= 0.0) return kInf;
        log_weight += std::log(w);
    }
    return log_max_class_count(model.class_count(), path.size()) - log_weight;
}

std::size_t switch_count(const CompetitionModel& model, std::span<const std::size_t> path) {
    std::size_t n = 0;
    for (std::size_t t = 1; t < path.size(); ++t) {
        if (model.arm_of(path[t]) != model.arm_of(path[t - 1])) ++n;
    }
    return n;
}

}  // namespace invbandit
