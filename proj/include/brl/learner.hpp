#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "brl/distribution.hpp"
#include "brl/mdp.hpp"
#include "brl/policy.hpp"
#include "brl/posterior.hpp"
#include "brl/prior.hpp"

namespace brl {

/// rho(n) = rho0 * tau / (tau + n), evaluated per (s,a) visit count n.
/// tau = +infinity degenerates to the constant rate rho0.
struct LearningSchedule {
    double rho0 = 1.0;
    double tau = 100.0;
};

inline double learning_rate(const LearningSchedule& schedule, std::int64_t n) {
    if (n < 0) throw std::invalid_argument("learning_rate: negative visit count");
    if (std::isinf(schedule.tau)) return schedule.rho0;
    return schedule.rho0 * schedule.tau / (schedule.tau + static_cast<double>(n));
}

struct LearnerConfig {
    double beta = 1000.0;
    LearningSchedule schedule{};
    int max_steps_per_episode = 10000;
    std::optional<double> init_log_b{};
};

/**
 * Mutable state of the incremental B learner: the log B table plus the
 * per-(s,a) visit counts that drive the decaying learning rate. Counts are
 * kept per pair, not globally, so the rate sequence along each pair's own
 * visits behaves like 1/n — rarely visited pairs are not starved by decay
 * accumulated elsewhere.
 *
 * A LearnerState is exclusively owned by one run; concurrent runs each get
 * their own.
 */
struct LearnerState {
    BTable b;
    std::vector<std::int64_t> visit_counts;
    LearningSchedule schedule;
    int max_steps_per_episode;

    std::int64_t visits(StateId s, ActionId a) const {
        return visit_counts[static_cast<std::size_t>(s) * b.num_actions() + a];
    }
};

inline LearnerState init_learner(const TabularMdp& mdp, const LearnerConfig& config) {
    if (!std::isfinite(config.beta) || config.beta <= 0.0)
        throw std::invalid_argument("init_learner: beta must be finite and positive");
    if (!(config.schedule.rho0 > 0.0) || config.schedule.rho0 > 1.0)
        throw std::invalid_argument("init_learner: rho0 must be in (0,1]");
    if (!(config.schedule.tau > 0.0))
        throw std::invalid_argument("init_learner: tau must be positive (or +inf)");
    if (config.max_steps_per_episode < 1)
        throw std::invalid_argument("init_learner: max_steps_per_episode must be >= 1");
    LearnerState learner{
        BTable(mdp, config.beta, config.init_log_b),
        std::vector<std::int64_t>(
            static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions(), 0),
        config.schedule, config.max_steps_per_episode};
    return learner;
}

/**
 * One stochastic update of log B(s,a) from an observed transition:
 *
 *     target = beta*r + log pi0(a|s) + logsumexp(log_b[s_next][.])
 *     log_b[s,a] <- logsumexp( log(1-rho) + log_b[s,a], log(rho) + target )
 *
 * i.e. the convex combination (1-rho)*B + rho*Btilde evaluated entirely in
 * log domain, so nothing overflows at large beta. rho = 1 replaces the
 * entry with the target outright (no log(0) is formed). Increments the
 * pair's visit count. Terminal rows are never touched (stepping out of a
 * terminal state is already a contract violation upstream).
 *
 * When the behaviour is prior-masked (mem != nullptr), the continuation sum
 * ranges over the actions the agent can actually take next — the same masked
 * row the behaviour q(.|s_next) ∝ B·f samples from, with prev = a. Without
 * this, entries the mask retires keep their last (stale) mass inside every
 * future logsumexp: explored cells then hold a floor of frozen mass that
 * caps the contrast between visited and unvisited territory, and masking
 * wall bumps ends up slowing exploration instead of speeding it up. If the
 * mask removes every action of s_next, the full row is used (the behaviour
 * policy has the mirror-image uniform fallback). Terminal rows are never
 * masked: A(terminal) = 1 by construction.
 */
inline void td_update(LearnerState& learner, const TabularMdp& mdp, StateId s, ActionId a,
                      double r, StateId s_next, const PriorMemory* mem = nullptr) {
    if (learner.b.is_terminal(s))
        throw std::logic_error("td_update: source state is terminal");
    const std::size_t idx = static_cast<std::size_t>(s) * learner.b.num_actions() + a;
    const double rho = learning_rate(learner.schedule, learner.visit_counts[idx]);
    double log_a_next;
    if (mem && !learner.b.is_terminal(s_next)) {
        double masked = neg_inf;
        bool any_allowed = false;
        for (ActionId a2 = 0; a2 < learner.b.num_actions(); ++a2) {
            if (mem->prior_f(s_next, a2, a) == 0) continue;
            any_allowed = true;
            masked = log_add_exp(masked, learner.b.log_b(s_next, a2));
        }
        log_a_next = any_allowed ? masked : learner.b.log_a(s_next);
    } else {
        log_a_next = learner.b.log_a(s_next);
    }
    const double target = log_b_estimate(learner.b.beta(), r, mdp.log_pi0(s, a), log_a_next);
    double updated;
    if (rho >= 1.0)
        updated = target;
    else
        updated = log_add_exp(std::log1p(-rho) + learner.b.log_b(s, a),
                              std::log(rho) + target);
    learner.b.set_log_b(s, a, updated);
    ++learner.visit_counts[idx];
}

/**
 * Runs one episode from `start`: sample an action from the policy, step the
 * environment, feed the prior memory (when present), apply td_update —
 * online, within the episode — until a terminal state or the step cap.
 * The policy is any callable (StateId, optional<ActionId> prev) ->
 * ActionDistribution.
 */
template <class Policy>
EpisodeRecord run_episode(const TabularMdp& mdp, LearnerState& learner, Policy&& policy,
                          PriorMemory* prior, StateId start, Rng& rng) {
    if (mdp.is_terminal(start))
        throw std::logic_error("run_episode: start state is terminal");
    if (prior) prior->begin_episode();
    EpisodeRecord record;
    StateId s = start;
    std::optional<ActionId> prev;
    while (!mdp.is_terminal(s) &&
           record.length() < learner.max_steps_per_episode) {
        const ActionDistribution dist = policy(s, prev);
        const ActionId a = sample_action(dist, rng);
        const auto [s_next, r] = mdp.step(s, a, rng);
        if (prior) prior->observe_transition(s, a, r, s_next);
        td_update(learner, mdp, s, a, r, s_next, prior);
        record.steps.push_back({s, a, r, s_next});
        prev = a;
        s = s_next;
    }
    record.terminated = mdp.is_terminal(s);
    return record;
}

/// Behaviour-policy callable for run_episode: B-proportional, masked by the
/// memory when one is supplied.
inline auto make_bayes_policy(const LearnerState& learner, const PriorMemory* mem) {
    return [&learner, mem](StateId s, std::optional<ActionId> prev) {
        return bayes_policy_from_B(learner.b, mem, s, prev);
    };
}

} // namespace brl
