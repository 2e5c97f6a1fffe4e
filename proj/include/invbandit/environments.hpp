#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace invbandit {

// Full T x M loss matrix of an oblivious adversary. Rounds and arms are
// 0-based here; the CSV format uses 1-based arms.
class LossStream {
public:
    LossStream() = default;
    // Row-major: values[t * arms + m]. Throws ConfigError on non-finite entries.
    LossStream(std::size_t arms, std::size_t horizon, std::vector<double> values);

    std::size_t arms() const { return arms_; }
    std::size_t horizon() const { return horizon_; }
    double loss(std::size_t t, std::size_t m) const { return values_[t * arms_ + m]; }
    const std::vector<double>& values() const { return values_; }

    double min() const;
    double max() const;
    // max - min over every entry.
    double range() const { return max() - min(); }

    friend bool operator==(const LossStream&, const LossStream&) = default;

private:
    std::size_t arms_ = 0;
    std::size_t horizon_ = 0;
    std::vector<double> values_;
};

struct Segment {
    std::size_t length = 0;
    std::vector<double> means;  // one per arm
};

// Per-segment arm means plus uniform noise on [-width/2, width/2].
LossStream piecewise_stationary(std::size_t arms, std::size_t horizon,
                                const std::vector<Segment>& segments, double noise_width,
                                std::uint64_t seed);

// Two equal halves: arm 0 best in the first (mean `base`), arm 1 best in the
// second, every other arm at base + gap.
std::vector<Segment> swapped_best_segments(std::size_t arms, std::size_t horizon, double base,
                                           double gap);

// matrix[t][m]
LossStream scripted(const std::vector<std::vector<double>>& matrix);

// a * loss + b entrywise; a > 0.
LossStream affine(const LossStream& base, double a, double b);

// Headered CSV `t,arm,loss` with 0-based t and 1-based arm; every (t, arm)
// cell must appear exactly once.
LossStream read_stream_csv(std::istream& in);
LossStream load_stream_csv(const std::string& path);
void write_stream_csv(std::ostream& out, const LossStream& stream);

}  // namespace invbandit
