#include "invbandit/environments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>
#include <utility>

#include "invbandit/errors.hpp"
#include "invbandit/rng.hpp"

namespace invbandit {

LossStream::LossStream(std::size_t arms, std::size_t horizon, std::vector<double> values)
    : arms_(arms), horizon_(horizon), values_(std::move(values)) {
    if (arms_ == 0 || horizon_ == 0) throw ConfigError("loss stream must be non-empty");
    if (values_.size() != arms_ * horizon_) throw ConfigError("loss matrix has the wrong size");
    for (double v : values_) {
        if (!std::isfinite(v)) throw ConfigError("loss stream contains a non-finite entry");
    }
}

double LossStream::min() const { return *std::min_element(values_.begin(), values_.end()); }
double LossStream::max() const { return *std::max_element(values_.begin(), values_.end()); }

LossStream piecewise_stationary(std::size_t arms, std::size_t horizon,
                                const std::vector<Segment>& segments, double noise_width,
                                std::uint64_t seed) {
    if (!(noise_width >= 0.0) || !std::isfinite(noise_width))
        throw ConfigError("noise width must be a finite nonnegative number");
    std::size_t total = 0;
    for (const auto& s : segments) {
        if (s.means.size() != arms) throw ConfigError("segment mean vector has the wrong arm count");
        total += s.length;
    }
    if (total != horizon)
        throw ConfigError("segment lengths sum to " + std::to_string(total) + ", expected " +
                          std::to_string(horizon));

    Rng rng(seed);
    std::vector<double> values;
    values.reserve(arms * horizon);
    for (const auto& s : segments) {
        for (std::size_t t = 0; t < s.length; ++t) {
            for (std::size_t m = 0; m < arms; ++m) {
                const double noise = noise_width > 0.0 ? (rng.uniform() - 0.5) * noise_width : 0.0;
                values.push_back(s.means[m] + noise);
            }
        }
    }
    return LossStream(arms, horizon, std::move(values));
}

std::vector<Segment> swapped_best_segments(std::size_t arms, std::size_t horizon, double base,
                                           double gap) {
    if (arms < 2) throw ConfigError("swapped segments need at least 2 arms");
    const std::size_t first = horizon / 2;
    Segment a{first, std::vector<double>(arms, base + gap)};
    Segment b{horizon - first, std::vector<double>(arms, base + gap)};
    a.means[0] = base;
    b.means[1] = base;
    std::vector<Segment> out;
    if (a.length > 0) out.push_back(std::move(a));
    out.push_back(std::move(b));
    return out;
}

LossStream scripted(const std::vector<std::vector<double>>& matrix) {
    if (matrix.empty() || matrix.front().empty()) throw ConfigError("scripted matrix is empty");
    const std::size_t arms = matrix.front().size();
    std::vector<double> values;
    values.reserve(arms * matrix.size());
    for (const auto& row : matrix) {
        if (row.size() != arms) throw ConfigError("scripted matrix is ragged");
        values.insert(values.end(), row.begin(), row.end());
    }
    return LossStream(arms, matrix.size(), std::move(values));
}

LossStream affine(const LossStream& base, double a, double b) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("affine scale must be positive");
    if (!std::isfinite(b)) throw ConfigError("affine shift must be finite");
    std::vector<double> values(base.values());
    for (double& v : values) v = a * v + b;
    return LossStream(base.arms(), base.horizon(), std::move(values));
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* what) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigError("stream CSV line " + std::to_string(line) + ": bad " + what + " '" +
                          std::string(text) + "'");
    return value;
}

}  // namespace

LossStream read_stream_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("stream CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,arm,loss") throw ConfigError("stream CSV header must be 't,arm,loss'");

    std::map<std::pair<std::size_t, std::size_t>, double> cells;
    std::size_t max_t = 0;
    std::size_t max_arm = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::string_view sv(line);
        const auto c1 = sv.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
        if (c2 == std::string_view::npos) throw ConfigError("stream CSV line " + std::to_string(lineno) + ": expected 3 fields");
        const auto t = parse_field<std::size_t>(sv.substr(0, c1), lineno, "round");
        const auto arm = parse_field<std::size_t>(sv.substr(c1 + 1, c2 - c1 - 1), lineno, "arm");
        const auto loss = parse_field<double>(sv.substr(c2 + 1), lineno, "loss");
        if (arm == 0) throw ConfigError("stream CSV line " + std::to_string(lineno) + ": arms are 1-based");
        if (!std::isfinite(loss)) throw ConfigError("stream CSV line " + std::to_string(lineno) + ": non-finite loss");
        if (!cells.emplace(std::pair{t, arm - 1}, loss).second)
            throw ConfigError("stream CSV line " + std::to_string(lineno) + ": duplicate cell");
        max_t = std::max(max_t, t);
        max_arm = std::max(max_arm, arm);
    }
    if (cells.empty()) throw ConfigError("stream CSV has no rows");
    const std::size_t horizon = max_t + 1;
    if (cells.size() != horizon * max_arm) throw ConfigError("stream CSV does not cover every (t, arm) cell");
    std::vector<double> values(horizon * max_arm);
    for (const auto& [key, v] : cells) values[key.first * max_arm + key.second] = v;
    return LossStream(max_arm, horizon, std::move(values));
}

LossStream load_stream_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open stream CSV '" + path + "'");
    return read_stream_csv(in);
}

void write_stream_csv(std::ostream& out, const LossStream& stream) {
    out << "t,arm,loss\n";
    char buf[64];
    for (std::size_t t = 0; t < stream.horizon(); ++t) {
        for (std::size_t m = 0; m < stream.arms(); ++m) {
            const auto res = std::to_chars(buf, buf + sizeof buf, stream.loss(t, m));
            out << t << ',' << m + 1 << ',' << std::string_view(buf, res.ptr - buf) << '\n';
        }
    }
}

}  // namespace invbandit
