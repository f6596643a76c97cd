#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace brl {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) computed without leaving the log domain.
inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

/// log(sum_i exp(xs[i])), max-shifted. When every entry equals -log(n) the
/// result is exactly 0.0 (the shifted terms are exactly 1.0), which keeps
/// pinned uniform rows normalising to exactly one.
inline double log_sum_exp(std::span<const double> xs) {
    double m = neg_inf;
    for (double x : xs) m = std::max(m, x);
    if (m == neg_inf) return neg_inf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

} // namespace brl
