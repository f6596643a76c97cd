#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "brl/distribution.hpp"
#include "brl/mdp.hpp"
#include "brl/numerics.hpp"

namespace brl {

/**
 * Log-domain table of B-values. B(s,a) is the total mass, over all
 * trajectories that start by taking action a in state s and then follow
 * the baseline policy pi0 until termination, of
 *
 *     exp(beta * total_reward) * (trajectory probability).
 *
 * It obeys the backward recursion B(s,a) = e^{beta r(s,a)} pi0(a|s)
 * Sum_{s'} p(s'|s,a) A(s') with A(s) = Sum_a B(s,a) and A(s) = 1 at
 * terminal states. Normalising a row of B yields the action distribution
 * that maximises the probability of high-reward trajectories.
 *
 * Everything is stored as log B: with beta in the thousands the linear
 * values overflow any floating format, so no linear-domain B is ever
 * materialised. Terminal rows are pinned to log(1/|A|), which makes the
 * row logsumexp exactly zero (A = 1 exactly).
 */
class BTable {
public:
    BTable(const TabularMdp& mdp, double beta,
           std::optional<double> init_log_b = std::nullopt)
        : num_states_(mdp.num_states()),
          num_actions_(mdp.num_actions()),
          beta_(beta) {
        if (!std::isfinite(beta) || beta < 0.0)
            throw std::invalid_argument("BTable: beta must be finite and non-negative");
        const double uniform = -std::log(static_cast<double>(num_actions_));
        const double init = init_log_b.value_or(uniform);
        if (!std::isfinite(init))
            throw std::invalid_argument("BTable: init_log_b must be finite");
        log_b_.assign(static_cast<std::size_t>(num_states_) * num_actions_, init);
        terminal_.resize(static_cast<std::size_t>(num_states_));
        for (StateId s = 0; s < num_states_; ++s) {
            terminal_[static_cast<std::size_t>(s)] = mdp.is_terminal(s) ? 1 : 0;
            if (terminal_[static_cast<std::size_t>(s)])
                for (ActionId a = 0; a < num_actions_; ++a)
                    log_b_[index(s, a)] = uniform;
        }
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    double beta() const { return beta_; }

    bool is_terminal(StateId s) const {
        check_state(s);
        return terminal_[static_cast<std::size_t>(s)] != 0;
    }

    double log_b(StateId s, ActionId a) const {
        check_state(s);
        check_action(a);
        return log_b_[index(s, a)];
    }

    /// Terminal rows are pinned; writing one is a contract violation.
    void set_log_b(StateId s, ActionId a, double value) {
        check_state(s);
        check_action(a);
        if (terminal_[static_cast<std::size_t>(s)])
            throw std::logic_error("BTable::set_log_b on pinned terminal row");
        if (!std::isfinite(value))
            throw std::invalid_argument("BTable::set_log_b: value must be finite");
        log_b_[index(s, a)] = value;
    }

    std::span<const double> row(StateId s) const {
        check_state(s);
        return {log_b_.data() + index(s, 0), static_cast<std::size_t>(num_actions_)};
    }

    /// log A(s) = logsumexp over the row; exactly 0 for terminal states.
    double log_a(StateId s) const { return log_sum_exp(row(s)); }

private:
    std::size_t index(StateId s, ActionId a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

    void check_state(StateId s) const {
        if (s < 0 || s >= num_states_)
            throw std::out_of_range("BTable: state id out of range");
    }

    void check_action(ActionId a) const {
        if (a < 0 || a >= num_actions_)
            throw std::out_of_range("BTable: action id out of range");
    }

    int num_states_;
    int num_actions_;
    double beta_;
    std::vector<double> log_b_;
    std::vector<std::uint8_t> terminal_;
};

/// One application of the backward rule in log domain. Shared between the
/// exact solver and the incremental update so that a full-replacement
/// incremental sweep reproduces the solver bit for bit.
inline double log_b_estimate(double beta, double reward, double log_pi0, double log_a_next) {
    return beta * reward + log_pi0 + log_a_next;
}

struct SolveStats {
    int sweeps = 0;
    double residual = 0.0;
};

/**
 * Computes the exact log B table by Gauss-Seidel fixed-point sweeps: every
 * non-terminal entry is refreshed in natural (s,a) order from the current
 * successor values until the largest log-domain change in a sweep drops
 * below tol. Episodic structure (termination reachable under pi0, and
 * pi0 e^{beta r} < 1 on any cycle) makes the map a contraction toward the
 * pinned terminal boundary.
 *
 * max_sweeps <= 0 selects the default of max(10 * num_states * num_actions,
 * 10000). The flat floor matters: the sweep count to reach tol is set by how
 * fast probability mass is absorbed at the terminal boundary, not by table
 * size, and small weakly-absorbing problems (e.g. mazes at low beta) need
 * several hundred sweeps regardless of their size. Throws std::runtime_error
 * with the final residual on non-convergence.
 */
inline BTable solve_exact_B(const TabularMdp& mdp, double beta, double tol = 1e-10,
                            int max_sweeps = 0, SolveStats* stats = nullptr) {
    if (!(tol > 0.0))
        throw std::invalid_argument("solve_exact_B: tol must be positive");
    if (!mdp.has_terminal())
        throw std::invalid_argument("solve_exact_B: MDP has no terminal state");
    BTable b(mdp, beta);
    if (max_sweeps <= 0)
        max_sweeps = std::max(10 * mdp.num_states() * mdp.num_actions(), 10000);

    double residual = 0.0;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        residual = 0.0;
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            if (mdp.is_terminal(s)) continue;
            for (ActionId a = 0; a < mdp.num_actions(); ++a) {
                double log_mix;
                if (mdp.row_deterministic(s, a)) {
                    log_mix = b.log_a(mdp.next_state(s, a));
                } else {
                    double acc = neg_inf;
                    mdp.for_each_successor(s, a, [&](StateId next, double p) {
                        if (p > 0.0) acc = log_add_exp(acc, std::log(p) + b.log_a(next));
                    });
                    log_mix = acc;
                }
                const double updated =
                    log_b_estimate(beta, mdp.reward(s, a), mdp.log_pi0(s, a), log_mix);
                residual = std::max(residual, std::abs(updated - b.log_b(s, a)));
                b.set_log_b(s, a, updated);
            }
        }
        if (residual < tol) {
            ++sweep;
            break;
        }
    }
    if (stats) *stats = {sweep, residual};
    if (residual >= tol)
        throw std::runtime_error("solve_exact_B: no convergence after " +
                                 std::to_string(sweep) + " sweeps, residual " +
                                 std::to_string(residual));
    return b;
}

/// Result of the explicit trajectory enumeration. truncated_mass is the
/// total probability of trajectories that had not terminated when the
/// horizon cut them off; the sum is complete only when it is ~0.
struct BruteForceResult {
    double value = 0.0;
    double truncated_mass = 0.0;
};

namespace detail {

struct BruteForceAccum {
    long double value = 0.0L;
    long double truncated = 0.0L;
    std::uint64_t nodes = 0;
    std::uint64_t max_nodes;
};

inline void brute_force_walk(const TabularMdp& mdp, double beta, StateId s, int depth,
                             int horizon, long double weight, long double prob,
                             BruteForceAccum& acc) {
    if (mdp.is_terminal(s)) {
        acc.value += weight;
        return;
    }
    if (depth == horizon) {
        acc.truncated += prob;
        return;
    }
    if (++acc.nodes > acc.max_nodes)
        throw std::runtime_error("brute_force_B: enumeration exceeds node budget");
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        const long double pi0 = std::exp(static_cast<long double>(mdp.log_pi0(s, a)));
        const long double boost =
            std::exp(static_cast<long double>(beta) * mdp.reward(s, a));
        mdp.for_each_successor(s, a, [&](StateId next, double p) {
            if (p <= 0.0) return;
            brute_force_walk(mdp, beta, next, depth + 1, horizon,
                             weight * pi0 * boost * p, prob * pi0 * p, acc);
        });
    }
}

} // namespace detail

/**
 * Independent oracle for B(s0,a0): explicitly sums
 * exp(beta * total_reward) * (path probability) over every trajectory that
 * takes a0 first and then follows pi0, each path stopping at its terminal
 * state or at the horizon. Exponential in the horizon; guarded by a node
 * budget rather than a blanket |A|^horizon bound because terminal pruning
 * usually collapses the tree.
 */
inline BruteForceResult brute_force_B(const TabularMdp& mdp, double beta, StateId s0,
                                      ActionId a0, int horizon,
                                      std::uint64_t max_nodes = 50'000'000ULL) {
    if (mdp.is_terminal(s0))
        throw std::invalid_argument("brute_force_B: s0 is terminal");
    if (horizon < 1)
        throw std::invalid_argument("brute_force_B: horizon must be >= 1");
    if (!std::isfinite(beta) || beta < 0.0)
        throw std::invalid_argument("brute_force_B: beta must be finite and non-negative");

    detail::BruteForceAccum acc;
    acc.max_nodes = max_nodes;
    const long double pi0 = std::exp(static_cast<long double>(mdp.log_pi0(s0, a0)));
    const long double boost = std::exp(static_cast<long double>(beta) * mdp.reward(s0, a0));
    mdp.for_each_successor(s0, a0, [&](StateId next, double p) {
        if (p <= 0.0) return;
        detail::brute_force_walk(mdp, beta, next, 1, horizon, pi0 * boost * p, pi0 * p, acc);
    });
    return {static_cast<double>(acc.value), static_cast<double>(acc.truncated)};
}

/// Action distribution proportional to B(s,.): exp(log_b - logsumexp(row)).
inline ActionDistribution optimal_policy_from_B(const BTable& b, StateId s) {
    return distribution_from_log_weights(b.row(s));
}

/// Dense table of undiscounted optimal state-action values.
class QTable {
public:
    QTable(int num_states, int num_actions)
        : num_states_(num_states), num_actions_(num_actions),
          q_(static_cast<std::size_t>(num_states) * num_actions, 0.0) {
        if (num_states < 1 || num_actions < 1)
            throw std::invalid_argument("QTable: dimensions must be >= 1");
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    double q(StateId s, ActionId a) const { return q_[index(s, a)]; }
    void set_q(StateId s, ActionId a, double v) { q_[index(s, a)] = v; }

    std::span<const double> row(StateId s) const {
        return {q_.data() + index(s, 0), static_cast<std::size_t>(num_actions_)};
    }

private:
    std::size_t index(StateId s, ActionId a) const {
        if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
            throw std::out_of_range("QTable: index out of range");
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

    int num_states_;
    int num_actions_;
    std::vector<double> q_;
};

/**
 * Undiscounted value iteration Q(s,a) = r(s,a) + max_a' Q(next,a') with
 * Q(terminal,.) = 0, for deterministic episodic MDPs (throws on stochastic
 * rows). Gauss-Seidel sweeps to sup-norm change < tol.
 */
inline QTable value_iteration_Q(const TabularMdp& mdp, double tol = 1e-10,
                                int max_sweeps = 0) {
    if (!(tol > 0.0))
        throw std::invalid_argument("value_iteration_Q: tol must be positive");
    if (!mdp.deterministic())
        throw std::invalid_argument("value_iteration_Q: requires deterministic dynamics");
    if (!mdp.has_terminal())
        throw std::invalid_argument("value_iteration_Q: MDP has no terminal state");
    QTable q(mdp.num_states(), mdp.num_actions());
    if (max_sweeps <= 0) max_sweeps = 10 * mdp.num_states() * mdp.num_actions();

    double residual = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        residual = 0.0;
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            if (mdp.is_terminal(s)) continue;
            for (ActionId a = 0; a < mdp.num_actions(); ++a) {
                const StateId next = mdp.next_state(s, a);
                double best_next = 0.0;
                if (!mdp.is_terminal(next)) {
                    best_next = q.q(next, 0);
                    for (ActionId a2 = 1; a2 < mdp.num_actions(); ++a2)
                        best_next = std::max(best_next, q.q(next, a2));
                }
                const double updated = mdp.reward(s, a) + best_next;
                residual = std::max(residual, std::abs(updated - q.q(s, a)));
                q.set_q(s, a, updated);
            }
        }
        if (residual < tol) return q;
    }
    throw std::runtime_error("value_iteration_Q: no convergence, residual " +
                             std::to_string(residual));
}

/**
 * Largest gap, over non-terminal (s,a), between (1/beta) log B(s,a) and the
 * optimal value Q(s,a). For deterministic dynamics this gap shrinks like
 * (path length) * log|A| / beta, so it vanishes as beta grows.
 */
inline double b_q_deviation(const BTable& b, const QTable& q) {
    if (b.num_states() != q.num_states() || b.num_actions() != q.num_actions())
        throw std::invalid_argument("b_q_deviation: table shapes differ");
    if (!(b.beta() > 0.0))
        throw std::invalid_argument("b_q_deviation: beta must be positive");
    double dev = 0.0;
    for (StateId s = 0; s < b.num_states(); ++s) {
        if (b.is_terminal(s)) continue;
        for (ActionId a = 0; a < b.num_actions(); ++a)
            dev = std::max(dev, std::abs(b.log_b(s, a) / b.beta() - q.q(s, a)));
    }
    return dev;
}

} // namespace brl
