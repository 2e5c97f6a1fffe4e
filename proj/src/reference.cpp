#include "invbandit/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "invbandit/errors.hpp"

namespace invbandit {

namespace {

double uniform_mixture(std::size_t t, std::size_t arms) {
    const double r = std::sqrt(static_cast<double>(arms) / static_cast<double>(t));
    return r < 0.5 ? r : 0.5;
}

}  // namespace

DenseReference::DenseReference(const CompetitionModel& model, double gamma,
                               std::optional<double> constant_eta)
    : model_(model), gamma_(gamma), constant_eta_(constant_eta),
      psi_(std::numeric_limits<double>::infinity()) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    const std::size_t classes = model.class_count();
    w_.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) w_[c] = model.prior(c);
    p_.assign(model.arm_count(), 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        p_[model.arm_of(c)] += w_[c];
        total += w_[c];
    }
    for (double& v : p_) v /= total;
}

OracleRound DenseReference::step(Arm arm, double loss) {
    const std::size_t M = model_.arm_count();
    const std::size_t C = model_.class_count();
    if (arm >= M) throw ContractError("scripted arm out of range");

    OracleRound out;
    out.p = p_;
    const double eps = uniform_mixture(t_, M);
    out.q.resize(M);
    for (std::size_t m = 0; m < M; ++m) out.q[m] = (1.0 - eps) * p_[m] + eps / static_cast<double>(M);

    psi_ = std::min(psi_, loss);
    std::vector<double> phi(M, 0.0);
    phi[arm] = (loss - psi_) / out.q[arm];

    double v = 0.0;
    for (std::size_t m = 0; m < M; ++m) v += p_[m] * phi[m] * phi[m];
    const double d = *std::max_element(phi.begin(), phi.end()) - *std::min_element(phi.begin(), phi.end());
    V_ += v;
    D_ = std::max(D_, d);

    Rate eta;
    if (constant_eta_) {
        eta = *constant_eta_;
    } else if (V_ + D_ * D_ > 0.0) {
        eta = gamma_ / std::sqrt(V_ + D_ * D_);
    }
    const Rate eta_used = eta_prev_ ? eta_prev_ : eta;
    double power = (eta_prev_ && eta) ? *eta / *eta_prev_ : 1.0;
    if (power_override_) power = power_override_(power);

    std::vector<double> z(C);
    for (std::size_t c = 0; c < C; ++c) {
        z[c] = eta_used ? w_[c] * std::exp(-*eta_used * phi[model_.arm_of(c)]) : w_[c];
    }

    std::vector<double> zp(C);
    double mass_in = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        zp[c] = std::pow(z[c], power);
        mass_in += zp[c];
    }
    std::vector<double> next(C, 0.0);
    for (std::size_t to = 0; to < C; ++to) {
        for (std::size_t from = 0; from < C; ++from) next[to] += model_.transition(to, from) * zp[from];
    }
    double mass_out = 0.0;
    for (double x : next) mass_out += x;
    for (double& x : next) x /= mass_out;

    std::vector<double> arm_w(M, 0.0);
    for (std::size_t c = 0; c < C; ++c) arm_w[model_.arm_of(c)] += next[c];
    double arm_total = 0.0;
    for (double x : arm_w) arm_total += x;
    for (std::size_t m = 0; m < M; ++m) p_[m] = arm_w[m] / arm_total;

    w_ = next;
    eta_prev_ = eta;
    ++t_;

    out.psi = psi_;
    out.V = V_;
    out.D = D_;
    out.eta = eta;
    out.power = power;
    out.mass_in = mass_in;
    out.mass_out = mass_out;
    out.weights = w_;
    return out;
}

OracleTrajectory dense_reference_run(const CompetitionModel& model, double gamma,
                                     std::span<const Arm> arms, std::span<const double> losses,
                                     std::optional<double> constant_eta) {
    if (arms.size() != losses.size()) throw ConfigError("arm and loss scripts differ in length");
    DenseReference ref(model, gamma, constant_eta);
    OracleTrajectory traj;
    traj.rounds.reserve(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) traj.rounds.push_back(ref.step(arms[i], losses[i]));
    return traj;
}

std::vector<std::vector<double>> sequence_mixture_oracle(const CompetitionModel& model,
                                                         std::span<const Arm> arms,
                                                         std::span<const double> losses,
                                                         double eta) {
    if (arms.size() != losses.size()) throw ConfigError("arm and loss scripts differ in length");
    const std::size_t M = model.arm_count();
    const std::size_t C = model.class_count();
    const std::size_t T = arms.size();
    double count = 1.0;
    for (std::size_t t = 0; t < T; ++t) count *= static_cast<double>(C);
    if (count > static_cast<double>(1u << 20)) throw ConfigError("too many sequences to enumerate");

    std::vector<std::vector<double>> ps;
    std::vector<double> phi_selected;  // phi of the scripted arm, per past round
    double psi = std::numeric_limits<double>::infinity();

    for (std::size_t t = 1; t <= T; ++t) {
        // Enumerate all C^t class sequences with an odometer.
        std::vector<std::size_t> seq(t, 0);
        std::vector<double> arm_w(M, 0.0);
        bool done = false;
        while (!done) {
            double weight = model.prior(seq[0]);
            for (std::size_t k = 1; k < t && weight > 0.0; ++k) weight *= model.transition(seq[k], seq[k - 1]);
            double cumulative_phi = 0.0;
            for (std::size_t tau = 0; tau + 1 < t; ++tau) {
                if (model.arm_of(seq[tau]) == arms[tau]) cumulative_phi += phi_selected[tau];
            }
            arm_w[model.arm_of(seq[t - 1])] += weight * std::exp(-eta * cumulative_phi);

            std::size_t pos = t;
            while (pos > 0) {
                --pos;
                if (++seq[pos] < C) break;
                seq[pos] = 0;
                if (pos == 0) done = true;
            }
        }
        double total = 0.0;
        for (double x : arm_w) total += x;
        for (double& x : arm_w) x /= total;

        const double eps = uniform_mixture(t, M);
        const Arm a = arms[t - 1];
        const double q_sel = (1.0 - eps) * arm_w[a] + eps / static_cast<double>(M);
        psi = std::min(psi, losses[t - 1]);
        phi_selected.push_back((losses[t - 1] - psi) / q_sel);
        ps.push_back(std::move(arm_w));
    }
    return ps;
}

FixedArmResult best_fixed_arm(const LossStream& stream) {
    FixedArmResult best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t m = 0; m < stream.arms(); ++m) {
        double total = 0.0;
        for (std::size_t t = 0; t < stream.horizon(); ++t) total += stream.loss(t, m);
        if (total < best.loss) best = {m, total};
    }
    return best;
}

namespace {

double path_loss(const LossStream& stream, std::span<const Arm> path) {
    double total = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) total += stream.loss(t, path[t]);
    return total;
}

}  // namespace

SwitchingResult best_switching_sequence(const LossStream& stream, std::size_t max_switches) {
    const std::size_t T = stream.horizon();
    const std::size_t M = stream.arms();
    SwitchingResult out;
    out.path.resize(T);

    if (max_switches + 1 >= T) {
        for (std::size_t t = 0; t < T; ++t) {
            Arm best = 0;
            for (std::size_t m = 1; m < M; ++m) {
                if (stream.loss(t, m) < stream.loss(t, best)) best = m;
            }
            out.path[t] = best;
        }
        out.loss = path_loss(stream, out.path);
        return out;
    }

    // cost[(t * K + j) * M + m]: least loss over rounds t..T-1 when round t
    // plays arm m and at most j switches remain.
    const std::size_t K = max_switches + 1;
    std::vector<double> cost(T * K * M);
    auto at = [&](std::size_t t, std::size_t j, std::size_t m) -> double& {
        return cost[(t * K + j) * M + m];
    };
    for (std::size_t j = 0; j < K; ++j)
        for (std::size_t m = 0; m < M; ++m) at(T - 1, j, m) = stream.loss(T - 1, m);

    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t j = 0; j < K; ++j) {
            // Best and second best of the next round with one fewer switch, so
            // the minimum over m' != m is O(1).
            double first = std::numeric_limits<double>::infinity();
            double second = first;
            std::size_t first_arm = M;
            if (j > 0) {
                for (std::size_t m = 0; m < M; ++m) {
                    const double c = at(t + 1, j - 1, m);
                    if (c < first) {
                        second = first;
                        first = c;
                        first_arm = m;
                    } else if (c < second) {
                        second = c;
                    }
                }
            }
            for (std::size_t m = 0; m < M; ++m) {
                const double stay = at(t + 1, j, m);
                const double move = m == first_arm ? second : first;
                at(t, j, m) = stream.loss(t, m) + std::min(stay, move);
            }
        }
    }

    std::size_t j = max_switches;
    Arm cur = 0;
    for (std::size_t m = 1; m < M; ++m) {
        if (at(0, j, m) < at(0, j, cur)) cur = m;
    }
    out.path[0] = cur;
    for (std::size_t t = 1; t < T; ++t) {
        auto candidate = [&](std::size_t m) {
            if (m == cur) return at(t, j, m);
            return j > 0 ? at(t, j - 1, m) : std::numeric_limits<double>::infinity();
        };
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < M; ++m) best = std::min(best, candidate(m));
        // Smallest arm index among the optimal continuations.
        Arm chosen = 0;
        while (candidate(chosen) != best) ++chosen;
        if (chosen != cur) --j;
        cur = chosen;
        out.path[t] = cur;
    }
    out.loss = path_loss(stream, out.path);
    return out;
}

SwitchingResult best_switching_sequence_exhaustive(const LossStream& stream,
                                                   std::size_t max_switches) {
    const std::size_t T = stream.horizon();
    const std::size_t M = stream.arms();
    double count = std::pow(static_cast<double>(M), static_cast<double>(T));
    if (count > static_cast<double>(1u << 24)) throw ConfigError("too many paths to enumerate");

    SwitchingResult best;
    best.loss = std::numeric_limits<double>::infinity();
    std::vector<Arm> path(T, 0);
    while (true) {
        std::size_t switches = 0;
        for (std::size_t t = 1; t < T; ++t) switches += path[t] != path[t - 1] ? 1 : 0;
        if (switches <= max_switches) {
            const double loss = path_loss(stream, path);
            if (loss < best.loss) best = {path, loss};
        }
        std::size_t pos = T;
        while (pos > 0) {
            --pos;
            if (++path[pos] < M) break;
            path[pos] = 0;
            if (pos == 0) return best;
        }
    }
}

Exp3::Exp3(std::size_t arms, Options options, Rng rng)
    : arms_(arms), options_(options), rng_(rng), estimated_loss_(arms, 0.0) {
    if (arms < 2) throw ConfigError("Exp3 needs at least 2 arms");
    if (!(options_.high > options_.low)) throw ConfigError("Exp3 loss range is empty");
    if (options_.schedule == Schedule::kConstant && !(options_.eta > 0.0))
        throw ConfigError("Exp3 learning rate must be positive");
}

double Exp3::current_eta() const {
    if (options_.schedule == Schedule::kConstant) return options_.eta;
    const double K = static_cast<double>(arms_);
    return std::sqrt(std::log(K) / (static_cast<double>(t_) * K));
}

std::vector<double> Exp3::probabilities() const {
    const double eta = current_eta();
    const double lowest = *std::min_element(estimated_loss_.begin(), estimated_loss_.end());
    std::vector<double> p(arms_);
    double total = 0.0;
    for (std::size_t m = 0; m < arms_; ++m) {
        p[m] = std::exp(-eta * (estimated_loss_[m] - lowest));
        total += p[m];
    }
    for (double& v : p) v /= total;
    return p;
}

Arm Exp3::select() {
    if (pending_) throw ContractError("Exp3::select() called twice without update()");
    const auto p = probabilities();
    const Arm arm = sample_arm(p, rng_);
    pending_ = arm;
    pending_prob_ = p[arm];
    return arm;
}

void Exp3::update(double loss) {
    if (!pending_) throw ContractError("Exp3::update() called without select()");
    if (!(loss >= options_.low && loss <= options_.high))
        throw ConfigError("loss " + std::to_string(loss) + " outside Exp3's declared range");
    const double scaled = (loss - options_.low) / (options_.high - options_.low);
    estimated_loss_[*pending_] += scaled / pending_prob_;
    pending_.reset();
    ++t_;
}

Exp3Trajectory exp3_baseline(const LossStream& stream, Exp3::Options options, Rng rng) {
    Exp3 learner(stream.arms(), options, rng);
    Exp3Trajectory out;
    out.arms.reserve(stream.horizon());
    for (std::size_t t = 0; t < stream.horizon(); ++t) {
        const Arm a = learner.select();
        learner.update(stream.loss(t, a));
        out.arms.push_back(a);
    }
    out.final_p = learner.probabilities();
    return out;
}

}  // namespace invbandit
