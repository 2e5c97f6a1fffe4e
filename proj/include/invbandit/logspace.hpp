#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace invbandit {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)); -inf for an empty range or when every term is -inf.
inline double log_sum_exp(std::span<const double> x) {
    if (x.empty()) return kNegInf;
    const double hi = *std::max_element(x.begin(), x.end());
    if (hi == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double v : x) sum += std::exp(v - hi);
    return hi + std::log(sum);
}

inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == kNegInf) return a;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace invbandit
