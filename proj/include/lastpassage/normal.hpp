#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace lastpassage {

/// Standard normal distribution function via erfc (full relative accuracy in both tails).
inline double normal_cdf(double z) {
    if (z == std::numeric_limits<double>::infinity()) return 1.0;
    if (z == -std::numeric_limits<double>::infinity()) return 0.0;
    return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

/// P(lo < Z <= hi) for standard normal Z, computed on the side of zero that
/// avoids cancellation.
inline double normal_interval(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (lo >= 0.0) return normal_cdf(-lo) - normal_cdf(-hi);
    if (hi <= 0.0) return normal_cdf(hi) - normal_cdf(lo);
    return 1.0 - normal_cdf(lo) - normal_cdf(-hi);
}

/// Distribution function of N(mean, var) at x.
inline double gaussian_cdf(double x, double mean, double var) {
    return normal_cdf((x - mean) / std::sqrt(var));
}

}  // namespace lastpassage
