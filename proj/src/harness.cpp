#include "invbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <exception>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <system_error>
#include <thread>

#include "invbandit/errors.hpp"
#include "invbandit/reference.hpp"
#include "invbandit/rng.hpp"

namespace invbandit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) return parts;
        start = pos + 1;
    }
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
    text = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                          std::string(text) + "'");
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value))
            throw ConfigError("config key '" + std::string(key) + "': value must be finite");
    }
    return value;
}

std::vector<double> parse_list(std::string_view text, std::string_view key) {
    std::vector<double> out;
    for (auto part : split(text, ',')) out.push_back(parse_number<double>(part, key));
    return out;
}

constexpr std::uint64_t kEnvStream = 0;

Rng run_rng(std::uint64_t seed, std::size_t run) { return Rng(seed).split(run + 1); }

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

void apply_override(ExperimentConfig& c, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    const std::string_view key = trim(assignment.substr(0, eq));
    const std::string_view value = trim(assignment.substr(eq + 1));

    if (key == "M") {
        c.M = parse_number<std::size_t>(value, key);
        if (c.M < 2) throw ConfigError("config key 'M': need at least 2 arms");
    } else if (key == "T") {
        c.T = parse_number<std::size_t>(value, key);
        if (c.T < 1) throw ConfigError("config key 'T': need at least 1 round");
    } else if (key == "runs") {
        c.runs = parse_number<std::size_t>(value, key);
        if (c.runs < 1) throw ConfigError("config key 'runs': need at least 1 run");
    } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "gamma") {
        if (value == "auto") {
            c.gamma.reset();
        } else {
            c.gamma = parse_number<double>(value, key);
            if (!(*c.gamma > 0.0)) throw ConfigError("config key 'gamma': must be positive");
        }
    } else if (key == "model") {
        parse_model(value, 2);  // syntax check only
        c.model = std::string(value);
    } else if (key == "env") {
        c.env = std::string(value);
    } else if (key == "affine") {
        if (value.empty() || value == "none") {
            c.affine.reset();
        } else {
            const auto ab = parse_list(value, key);
            if (ab.size() != 2) throw ConfigError("config key 'affine': expected 'a,b'");
            if (!(ab[0] > 0.0)) throw ConfigError("config key 'affine': scale must be positive");
            c.affine = std::pair{ab[0], ab[1]};
        }
    } else if (key == "competition") {
        parse_competition(value);
        c.competition = std::string(value);
    } else if (key == "output") {
        c.output = std::string(value);
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv(line);
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        sv = trim(sv);
        if (sv.empty()) continue;
        apply_override(c, sv);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

std::size_t parse_competition(std::string_view spec) {
    if (spec == "fixed") return 0;
    constexpr std::string_view kSwitching = "switching:";
    if (spec.starts_with(kSwitching)) return parse_number<std::size_t>(spec.substr(kSwitching.size()), "competition");
    throw ConfigError("config key 'competition': expected 'fixed' or 'switching:<k>'");
}

Competition best_competition(const LossStream& stream, std::size_t max_switches) {
    Competition c;
    c.max_switches = max_switches;
    if (max_switches == 0) {
        const auto best = best_fixed_arm(stream);
        c.path.assign(stream.horizon(), best.arm);
        c.loss = best.loss;
    } else {
        auto best = best_switching_sequence(stream, max_switches);
        c.path = std::move(best.path);
        c.loss = best.loss;
    }
    c.round_losses.resize(stream.horizon());
    for (std::size_t t = 0; t < stream.horizon(); ++t) c.round_losses[t] = stream.loss(t, c.path[t]);
    return c;
}

LossStream build_stream(const ExperimentConfig& config) {
    const std::string_view env = config.env;
    const std::uint64_t seed = Rng(config.seed).split(kEnvStream).key();
    LossStream stream;
    if (env.starts_with("swap:")) {
        const auto parts = split(env.substr(5), ':');
        if (parts.size() != 2) throw ConfigError("config key 'env': expected swap:<gap>:<noise_width>");
        const double gap = parse_number<double>(parts[0], "env");
        const double noise = parse_number<double>(parts[1], "env");
        stream = piecewise_stationary(config.M, config.T,
                                      swapped_best_segments(config.M, config.T, 0.25, gap), noise, seed);
    } else if (env.starts_with("piecewise:")) {
        const std::string_view rest = env.substr(10);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos)
            throw ConfigError("config key 'env': expected piecewise:<noise_width>:<segments>");
        const double noise = parse_number<double>(rest.substr(0, colon), "env");
        std::vector<Segment> segments;
        for (auto seg : split(rest.substr(colon + 1), '/')) {
            const auto at = seg.find('@');
            if (at == std::string_view::npos) throw ConfigError("config key 'env': segment needs <len>@<means>");
            segments.push_back({parse_number<std::size_t>(seg.substr(0, at), "env"),
                                parse_list(seg.substr(at + 1), "env")});
        }
        stream = piecewise_stationary(config.M, config.T, segments, noise, seed);
    } else if (env.starts_with("scripted:")) {
        stream = load_stream_csv(std::string(env.substr(9)));
        if (stream.arms() != config.M || stream.horizon() != config.T)
            throw ConfigError("config key 'env': scripted stream is " + std::to_string(stream.horizon()) +
                              "x" + std::to_string(stream.arms()) + ", config says T=" +
                              std::to_string(config.T) + " M=" + std::to_string(config.M));
    } else {
        throw ConfigError("config key 'env': unknown environment '" + config.env + "'");
    }
    if (config.affine) stream = affine(stream, config.affine->first, config.affine->second);
    return stream;
}

double regret_bound(double range, std::size_t arms, std::size_t horizon, double complexity) {
    return range * std::sqrt(static_cast<double>(arms) * static_cast<double>(horizon)) *
           (5.0 + 4.0 * std::sqrt(complexity));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    return run_experiment(config, build_stream(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LossStream& stream) {
    if (stream.arms() != config.M || stream.horizon() != config.T)
        throw ConfigError("stream shape does not match config M/T");
    const ModelPtr model = parse_model(config.model, config.M);
    const std::size_t switches = parse_competition(config.competition);

    ExperimentResult result;
    RegretReport& rep = result.report;
    rep.competition = best_competition(stream, switches);
    rep.range = stream.range();
    rep.complexity = complexity(*model, rep.competition.path);
    rep.gamma = config.gamma ? *config.gamma
                             : std::sqrt(complexity_budget(*model, config.T, switches));

    const std::size_t T = config.T;
    std::vector<double> comp_cum(T + 1, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        comp_cum[t + 1] = comp_cum[t] + rep.competition.round_losses[t];

    result.runs.resize(config.runs);
    // Cumulative regret per run; row r holds rounds 1..T.
    std::vector<double> regret(config.runs * T);

    auto play = [&](std::size_t r) {
        Bandit bandit(model, BanditOptions{rep.gamma, std::nullopt}, run_rng(config.seed, r));
        RunTrace& tr = result.runs[r];
        tr.arms.resize(T);
        tr.losses.resize(T);
        tr.etas.resize(T);
        tr.epsilons.resize(T);
        tr.psis.resize(T);
        double cum = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const Selection sel = bandit.select();
            const double loss = stream.loss(t, sel.arm);
            const RoundRecord rec = bandit.update(loss);
            cum += loss;
            tr.arms[t] = sel.arm;
            tr.losses[t] = loss;
            tr.etas[t] = rec.eta ? *rec.eta : std::numeric_limits<double>::quiet_NaN();
            tr.epsilons[t] = rec.epsilon;
            tr.psis[t] = rec.psi;
            regret[r * T + t] = cum - comp_cum[t + 1];
        }
        tr.final_p.assign(bandit.p().begin(), bandit.p().end());
        tr.final_regret = regret[r * T + T - 1];
    };

    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(config.runs, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < config.runs; r = next++) {
                    try {
                        play(r);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);

    // Reduction in run order, independent of scheduling.
    const double n = static_cast<double>(config.runs);
    rep.mean_regret.assign(T + 1, 0.0);
    rep.stderr_regret.assign(T + 1, 0.0);
    rep.bound.assign(T + 1, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
        double mean = 0.0;
        double m2 = 0.0;
        for (std::size_t r = 0; r < config.runs; ++r) {
            const double x = regret[r * T + t - 1];
            const double delta = x - mean;
            mean += delta / static_cast<double>(r + 1);
            m2 += delta * (x - mean);
        }
        rep.mean_regret[t] = mean;
        rep.stderr_regret[t] = config.runs > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
        rep.bound[t] = regret_bound(rep.range, config.M, t, rep.complexity);
    }
    rep.final_mean = rep.mean_regret[T];
    rep.final_stderr = rep.stderr_regret[T];
    rep.bound_value = rep.bound[T];
    rep.bound_satisfied = rep.final_mean + 2.0 * rep.final_stderr <= rep.bound_value;
    return result;
}

void write_runs_csv(std::ostream& out, const ExperimentResult& result) {
    const auto& comp = result.report.competition;
    out << "run,t,arm,loss,cum_loss,comp_arm,comp_loss,regret,eta,epsilon,psi\n";
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        const RunTrace& tr = result.runs[r];
        double cum = 0.0;
        double comp_cum = 0.0;
        for (std::size_t t = 0; t < tr.arms.size(); ++t) {
            cum += tr.losses[t];
            comp_cum += comp.round_losses[t];
            out << r << ',' << t + 1 << ',' << tr.arms[t] + 1 << ',' << fmt(tr.losses[t]) << ','
                << fmt(cum) << ',' << comp.path[t] + 1 << ',' << fmt(comp.round_losses[t]) << ','
                << fmt(cum - comp_cum) << ',' << fmt(tr.etas[t]) << ',' << fmt(tr.epsilons[t]) << ','
                << fmt(tr.psis[t]) << '\n';
        }
    }
}

void write_summary_csv(std::ostream& out, const RegretReport& report) {
    out << "t,mean_regret,stderr_regret,bound\n";
    for (std::size_t t = 0; t < report.mean_regret.size(); ++t) {
        out << t << ',' << fmt(report.mean_regret[t]) << ',' << fmt(report.stderr_regret[t]) << ','
            << fmt(report.bound[t]) << '\n';
    }
}

}  // namespace invbandit
