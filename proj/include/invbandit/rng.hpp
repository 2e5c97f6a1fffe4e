#pragma once

#include <cstdint>
#include <limits>

namespace invbandit {

// Counter-based generator: output n is a fixed hash of (key, n). The whole
// state is two integers, so it serializes exactly and streams can be split
// off deterministically by index (one stream per Monte Carlo run).
class Rng {
public:
    using result_type = std::uint64_t;

    constexpr Rng() = default;
    constexpr explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kStreamSalt)) {}
    constexpr Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        const std::uint64_t c = counter_++;
        return mix(mix(key_ ^ (c * kGolden)) ^ key_);
    }

    // Uniform in [0, 1) with 53 random bits.
    constexpr double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Independent child stream; does not advance this generator.
    constexpr Rng split(std::uint64_t stream) const {
        return Rng(mix(key_ ^ mix(stream + kGolden)), 0);
    }

    constexpr std::uint64_t key() const { return key_; }
    constexpr std::uint64_t counter() const { return counter_; }

    friend constexpr bool operator==(const Rng&, const Rng&) = default;

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;

    // splitmix64 finalizer
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = mix(kStreamSalt);
    std::uint64_t counter_ = 0;
};

}  // namespace invbandit
