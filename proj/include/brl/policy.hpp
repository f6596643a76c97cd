#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "brl/distribution.hpp"
#include "brl/posterior.hpp"
#include "brl/prior.hpp"

namespace brl {

/**
 * Behaviour policy combining the learned B row with the rule memory:
 * weights proportional to B(s,a) with every ruled-out action forced to
 * exactly zero, renormalised over the rest. With mem == nullptr this is
 * the plain B-proportional policy, identical (bitwise) to
 * optimal_policy_from_B.
 *
 * Should the rules mask every action, the prior is ignored for this one
 * step and the uniform distribution is returned — a hard failure would
 * deadlock the episode, and one uniform step keeps every action visitable.
 */
inline ActionDistribution bayes_policy_from_B(const BTable& b, const PriorMemory* mem,
                                              StateId s,
                                              std::optional<ActionId> prev_action = std::nullopt) {
    if (b.is_terminal(s))
        throw std::logic_error("bayes_policy_from_B: no behaviour at a terminal state");
    const std::span<const double> row = b.row(s);
    if (!mem) return distribution_from_log_weights(row);

    const int n = b.num_actions();
    std::vector<int> allowed(static_cast<std::size_t>(n));
    double m = neg_inf;
    bool any = false;
    for (ActionId a = 0; a < n; ++a) {
        allowed[static_cast<std::size_t>(a)] = mem->prior_f(s, a, prev_action);
        if (allowed[static_cast<std::size_t>(a)]) {
            m = std::max(m, row[static_cast<std::size_t>(a)]);
            any = true;
        }
    }
    ActionDistribution dist;
    dist.probs.assign(static_cast<std::size_t>(n), 0.0);
    if (!any) {
        for (double& p : dist.probs) p = 1.0 / n;
        return dist;
    }
    double sum = 0.0;
    for (ActionId a = 0; a < n; ++a) {
        const double w = allowed[static_cast<std::size_t>(a)]
                             ? std::exp(row[static_cast<std::size_t>(a)] - m)
                             : 0.0;
        dist.probs[static_cast<std::size_t>(a)] = w;
        sum += w;
    }
    for (double& p : dist.probs) p /= sum;
    return dist;
}

/// Boltzmann distribution exp(beta*q) / sum, computed with max-subtraction;
/// beta = 0 yields the uniform distribution.
inline ActionDistribution softmax_q_policy(std::span<const double> q_row, double beta) {
    if (!std::isfinite(beta) || beta < 0.0)
        throw std::invalid_argument("softmax_q_policy: beta must be finite and non-negative");
    std::vector<double> log_w(q_row.size());
    for (std::size_t i = 0; i < q_row.size(); ++i) {
        if (!std::isfinite(q_row[i]))
            throw std::invalid_argument("softmax_q_policy: q values must be finite");
        log_w[i] = beta * q_row[i];
    }
    return distribution_from_log_weights(log_w);
}

} // namespace brl
