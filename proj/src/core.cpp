#include "invbandit/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <system_error>

#include <json.hpp>

#include "invbandit/errors.hpp"
#include "invbandit/logspace.hpp"

namespace invbandit {

ClassWeights::ClassWeights(std::vector<double> log_weights, std::vector<Arm> arm_of,
                           std::size_t arms)
    : log_w_(std::move(log_weights)), arm_of_(std::move(arm_of)), arms_(arms) {
    if (log_w_.size() != arm_of_.size())
        throw ConfigError("class weights and class-to-arm map differ in size");
    for (Arm a : arm_of_) {
        if (a >= arms_) throw ConfigError("class maps to a nonexistent arm");
    }
}

ClassWeights ClassWeights::from_prior(const CompetitionModel& model) {
    const std::size_t classes = model.class_count();
    if (classes == 0) throw ConfigError("competition model has an empty class set");
    std::vector<double> log_w(classes);
    std::vector<Arm> arms(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const double pr = model.prior(c);
        log_w[c] = pr > 0.0 ? std::log(pr) : kNegInf;
        arms[c] = model.arm_of(c);
    }
    return ClassWeights(std::move(log_w), std::move(arms), model.arm_count());
}

double ClassWeights::renormalize() {
    const double hi = *std::max_element(log_w_.begin(), log_w_.end());
    if (hi == kNegInf) throw DegenerateWeights("all class weights vanished");
    for (double& v : log_w_) v -= hi;
    return hi;
}

double mixture_coefficient(std::size_t t, std::size_t arms) {
    if (arms < 2) throw ConfigError("mixture coefficient needs at least 2 arms");
    if (t < 1) throw ConfigError("rounds are numbered from 1");
    return std::min(0.5, std::sqrt(static_cast<double>(arms) / static_cast<double>(t)));
}

std::vector<double> selection_probabilities(std::span<const double> p, double eps) {
    const double floor = eps / static_cast<double>(p.size());
    std::vector<double> q(p.size());
    for (std::size_t m = 0; m < p.size(); ++m) q[m] = (1.0 - eps) * p[m] + floor;
    return q;
}

std::vector<double> arm_marginals(const ClassWeights& w) {
    const auto log_w = w.log_weights();
    if (log_w.empty()) throw DegenerateWeights("no equivalence classes");
    const double hi = *std::max_element(log_w.begin(), log_w.end());
    if (hi == kNegInf) throw DegenerateWeights("all class weights vanished");
    std::vector<double> p(w.arm_count(), 0.0);
    for (std::size_t c = 0; c < log_w.size(); ++c) p[w.arm_of(c)] += std::exp(log_w[c] - hi);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    return p;
}

Arm sample_arm(std::span<const double> q, double u) {
    double cumulative = 0.0;
    for (std::size_t m = 0; m < q.size(); ++m) {
        cumulative += q[m];
        if (u < cumulative) return m;
    }
    // Rounding left the CDF just below 1: take the last arm with positive mass.
    for (std::size_t m = q.size(); m-- > 0;) {
        if (q[m] > 0.0) return m;
    }
    return q.size() - 1;
}

Arm sample_arm(std::span<const double> q, Rng& rng) { return sample_arm(q, rng.uniform()); }

MeasuredRound performance_measure(double loss, Arm selected, double q_sel, double psi_prev) {
    if (!(q_sel > 0.0 && q_sel <= 1.0))
        throw ContractError("selection probability must lie in (0, 1]");
    const double psi = std::min(psi_prev, loss);
    const double phi = (loss - psi) / q_sel;
    return {PerformanceMeasure{phi, selected, q_sel}, psi};
}

AdaptiveState update_statistics(AdaptiveState state, const PerformanceMeasure& pm, double p_sel) {
    state.V += p_sel * pm.phi * pm.phi;
    state.D = std::max(state.D, pm.phi);
    return state;
}

Rate learning_rate(const AdaptiveState& state) {
    const double denom = state.V + state.D * state.D;
    if (!(denom > 0.0)) return std::nullopt;
    return state.gamma / std::sqrt(denom);
}

std::vector<double> exponential_update(const ClassWeights& w, const PerformanceMeasure& pm,
                                       double eta) {
    std::vector<double> log_z(w.log_weights().begin(), w.log_weights().end());
    if (pm.phi == 0.0) return log_z;
    const double penalty = eta * pm.phi;
    for (std::size_t c = 0; c < log_z.size(); ++c) {
        if (w.arm_of(c) == pm.selected) log_z[c] -= penalty;
    }
    return log_z;
}

SharedWeights weight_share(std::span<const double> log_z, const CompetitionModel& model,
                           double power) {
    if (log_z.size() != model.class_count())
        throw ContractError("weight vector does not match the model's class count");
    std::vector<double> log_y(log_z.size());
    for (std::size_t c = 0; c < log_z.size(); ++c) log_y[c] = power * log_z[c];
    SharedWeights out;
    out.log_mass_in = log_sum_exp(log_y);
    out.log_w = model.propagate(log_y);
    out.log_mass_out = log_sum_exp(out.log_w);
    return out;
}

Bandit::Bandit(ModelPtr model, BanditOptions options, Rng rng)
    : model_(std::move(model)), options_(options), rng_(rng) {
    if (!model_) throw ConfigError("no competition model");
    if (model_->arm_count() < 2) throw ConfigError("need at least 2 arms");
    if (!(options_.gamma > 0.0) || !std::isfinite(options_.gamma))
        throw ConfigError("gamma must be a positive finite number");
    if (options_.constant_eta && !(*options_.constant_eta > 0.0))
        throw ConfigError("constant learning rate must be positive");
    model_->validate();
    weights_ = ClassWeights::from_prior(*model_);
    p_ = arm_marginals(weights_);
    state_.gamma = options_.gamma;
    state_.arms = model_->arm_count();
}

std::vector<double> Bandit::current_q(double eps) const { return selection_probabilities(p_, eps); }

Selection Bandit::make_selection(Arm arm, std::vector<double> q, double eps) {
    if (pending_) throw ContractError("select() called twice without update()");
    if (arm >= state_.arms) throw ContractError("selected arm out of range");
    pending_ = Pending{arm, q[arm], p_[arm], eps};
    return Selection{arm, std::move(q), eps};
}

Selection Bandit::select() {
    if (pending_) throw ContractError("select() called twice without update()");
    return select_with_draw(rng_.uniform());
}

Selection Bandit::select_with_draw(double u) {
    const double eps = mixture_coefficient(state_.t, state_.arms);
    auto q = current_q(eps);
    const Arm arm = sample_arm(q, u);
    return make_selection(arm, std::move(q), eps);
}

Selection Bandit::select_arm(Arm arm) {
    const double eps = mixture_coefficient(state_.t, state_.arms);
    return make_selection(arm, current_q(eps), eps);
}

RoundRecord Bandit::update(double loss) {
    if (!pending_) throw ContractError("update() called without a pending select()");
    if (!std::isfinite(loss)) throw ConfigError("losses must be finite");
    const Pending sel = *pending_;

    const auto [pm, psi] = performance_measure(loss, sel.arm, sel.q_sel, state_.psi);
    AdaptiveState next = update_statistics(state_, pm, sel.p_sel);
    next.psi = psi;

    const Rate eta = options_.constant_eta ? Rate(*options_.constant_eta) : learning_rate(next);
    // Until a nonzero measure has been seen eta_{t-1} is undefined; use eta_t
    // in its place, which makes the sharing exponent 1.
    const Rate eta_used = state_.eta_prev ? state_.eta_prev : eta;
    const double power = (state_.eta_prev && eta) ? *eta / *state_.eta_prev : 1.0;

    std::vector<double> log_z =
        eta_used ? exponential_update(weights_, pm, *eta_used)
                 : std::vector<double>(weights_.log_weights().begin(), weights_.log_weights().end());
    SharedWeights shared = weight_share(log_z, *model_, power);

    weights_ = ClassWeights(std::move(shared.log_w),
                            std::vector<Arm>(weights_.arm_map().begin(), weights_.arm_map().end()),
                            state_.arms);
    weights_.renormalize();
    p_ = arm_marginals(weights_);

    RoundRecord rec;
    rec.t = state_.t;
    rec.arm = sel.arm;
    rec.loss = loss;
    rec.phi = pm.phi;
    rec.psi = psi;
    rec.epsilon = sel.epsilon;
    rec.eta = eta;
    rec.power = power;
    rec.log_mass_in = shared.log_mass_in;
    rec.log_mass_out = shared.log_mass_out;

    next.eta_prev = eta;
    next.t = state_.t + 1;
    state_ = next;
    pending_.reset();
    return rec;
}

RoundRecord Bandit::step(const std::function<double(Arm)>& loss_of) {
    const Selection sel = select();
    return update(loss_of(sel.arm));
}

namespace {

using nlohmann::json;

constexpr int kSnapshotVersion = 1;

std::string hex(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    return std::string(buf, res.ptr);
}

double unhex(const json& j) {
    const std::string s = j.get<std::string>();
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    // from_chars does not accept a leading '+'; to_chars never writes one.
    const auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::hex);
    if (ec != std::errc{} || ptr != last) throw ConfigError("bad number in snapshot: " + s);
    return v;
}

json hex_array(std::span<const double> xs) {
    json arr = json::array();
    for (double v : xs) arr.push_back(hex(v));
    return arr;
}

std::vector<double> unhex_array(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(unhex(v));
    return out;
}

json optional_hex(const std::optional<double>& v) { return v ? json(hex(*v)) : json(nullptr); }

std::optional<double> optional_unhex(const json& j) {
    if (j.is_null()) return std::nullopt;
    return unhex(j);
}

}  // namespace

std::string Bandit::snapshot() const {
    json j;
    j["format"] = "invbandit-state";
    j["version"] = kSnapshotVersion;
    j["model"] = model_->spec();
    j["arms"] = state_.arms;
    j["gamma"] = hex(options_.gamma);
    j["constant_eta"] = optional_hex(options_.constant_eta);
    j["rng"] = {{"key", rng_.key()}, {"counter", rng_.counter()}};
    j["state"] = {{"t", state_.t},
                  {"psi", hex(state_.psi)},
                  {"V", hex(state_.V)},
                  {"D", hex(state_.D)},
                  {"eta_prev", optional_hex(state_.eta_prev)}};
    j["log_weights"] = hex_array(weights_.log_weights());
    j["p"] = hex_array(p_);
    if (pending_) {
        j["pending"] = {{"arm", pending_->arm},
                        {"q_sel", hex(pending_->q_sel)},
                        {"p_sel", hex(pending_->p_sel)},
                        {"epsilon", hex(pending_->epsilon)}};
    } else {
        j["pending"] = nullptr;
    }
    return j.dump(2);
}

Bandit Bandit::restore(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("snapshot is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "invbandit-state") throw ConfigError("not a bandit snapshot");
        if (j.at("version").get<int>() != kSnapshotVersion)
            throw ConfigError("unsupported snapshot version " + j.at("version").dump());

        const auto arms = j.at("arms").get<std::size_t>();
        Bandit b;
        b.model_ = parse_model(j.at("model").get<std::string>(), arms);
        b.options_.gamma = unhex(j.at("gamma"));
        b.options_.constant_eta = optional_unhex(j.at("constant_eta"));
        b.rng_ = Rng(j.at("rng").at("key").get<std::uint64_t>(),
                     j.at("rng").at("counter").get<std::uint64_t>());

        const json& st = j.at("state");
        b.state_.t = st.at("t").get<std::size_t>();
        b.state_.psi = unhex(st.at("psi"));
        b.state_.V = unhex(st.at("V"));
        b.state_.D = unhex(st.at("D"));
        b.state_.eta_prev = optional_unhex(st.at("eta_prev"));
        b.state_.gamma = b.options_.gamma;
        b.state_.arms = arms;

        ClassWeights prior = ClassWeights::from_prior(*b.model_);
        auto log_w = unhex_array(j.at("log_weights"));
        if (log_w.size() != prior.class_count())
            throw ConfigError("snapshot weight count does not match the model");
        b.weights_ = ClassWeights(std::move(log_w),
                                  std::vector<Arm>(prior.arm_map().begin(), prior.arm_map().end()),
                                  arms);
        b.p_ = unhex_array(j.at("p"));
        if (b.p_.size() != arms) throw ConfigError("snapshot arm distribution has wrong size");

        const json& pend = j.at("pending");
        if (!pend.is_null()) {
            b.pending_ = Pending{pend.at("arm").get<Arm>(), unhex(pend.at("q_sel")),
                                 unhex(pend.at("p_sel")), unhex(pend.at("epsilon"))};
        }
        return b;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed snapshot: ") + e.what());
    }
}

}  // namespace invbandit
