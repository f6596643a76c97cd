#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "brl/mdp.hpp"
#include "brl/numerics.hpp"
#include "brl/random.hpp"

namespace brl {

/// A normalised probability distribution over action ids 0..size()-1.
struct ActionDistribution {
    std::vector<double> probs;

    int size() const { return static_cast<int>(probs.size()); }
    double operator[](int a) const { return probs[static_cast<std::size_t>(a)]; }

    bool normalized(double eps = 1e-12) const {
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0) || !std::isfinite(p)) return false;
            sum += p;
        }
        return std::abs(sum - 1.0) <= eps;
    }
};

/**
 * Exponentiates-and-normalises a vector of log weights with the usual
 * max-shift, so any finite magnitudes are safe. Entries of -inf map to
 * probability zero; at least one entry must be finite.
 */
inline ActionDistribution distribution_from_log_weights(std::span<const double> log_w) {
    if (log_w.empty())
        throw std::invalid_argument("distribution_from_log_weights: empty input");
    double m = neg_inf;
    for (double x : log_w) m = std::max(m, x);
    if (m == neg_inf)
        throw std::invalid_argument("distribution_from_log_weights: all weights are zero");
    ActionDistribution dist;
    dist.probs.resize(log_w.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        const double w = log_w[i] == neg_inf ? 0.0 : std::exp(log_w[i] - m);
        dist.probs[i] = w;
        sum += w;
    }
    for (double& p : dist.probs) p /= sum;
    return dist;
}

/**
 * Inverse-CDF sample. The strict `u < cum` comparison means zero-probability
 * actions can never be drawn; rounding at the top of the CDF falls back to
 * the last positive entry.
 */
inline ActionId sample_action(const ActionDistribution& dist, Rng& rng) {
    if (dist.size() == 0)
        throw std::invalid_argument("sample_action: empty distribution");
    const double u = rng.uniform();
    double cum = 0.0;
    int last_positive = -1;
    for (int a = 0; a < dist.size(); ++a) {
        const double p = dist[a];
        if (p <= 0.0) continue;
        last_positive = a;
        cum += p;
        if (u < cum) return a;
    }
    if (last_positive < 0)
        throw std::invalid_argument("sample_action: distribution has no positive mass");
    return last_positive;
}

} // namespace brl
