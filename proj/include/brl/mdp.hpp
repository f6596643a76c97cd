#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "brl/numerics.hpp"
#include "brl/random.hpp"

namespace brl {

using StateId = int;
using ActionId = int;

/// One entry of a stochastic transition row.
struct Transition {
    StateId state;
    double prob;
};

/**
 * Finite episodic MDP stored as dense tables: a next-state table for
 * deterministic rows (with per-row sparse distributions for stochastic
 * ones), rewards r(s,a), a terminal-state set, and the baseline policy
 * pi0 kept as log-probabilities (uniform by default).
 *
 * Build with the setters, call validate(), then treat the object as
 * immutable; a validated TabularMdp is safely shareable across concurrent
 * runs, each of which owns its private Rng.
 */
class TabularMdp {
public:
    TabularMdp(int num_states, int num_actions)
        : num_states_(num_states),
          num_actions_(num_actions) {
        if (num_states < 1 || num_actions < 1)
            throw std::invalid_argument("TabularMdp: num_states and num_actions must be >= 1");
        const std::size_t n = static_cast<std::size_t>(num_states) * num_actions;
        det_next_.resize(n);
        for (StateId s = 0; s < num_states; ++s)
            for (ActionId a = 0; a < num_actions; ++a)
                det_next_[index(s, a)] = s; // self-loop until configured
        sto_rows_.resize(n);
        reward_.assign(n, 0.0);
        log_pi0_.assign(n, -std::log(static_cast<double>(num_actions)));
        terminal_.assign(static_cast<std::size_t>(num_states), 0);
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    void set_transition(StateId s, ActionId a, StateId next) {
        check_state(s);
        check_action(a);
        check_state(next);
        det_next_[index(s, a)] = next;
        sto_rows_[index(s, a)].clear();
    }

    void set_transition(StateId s, ActionId a, std::vector<Transition> row) {
        check_state(s);
        check_action(a);
        if (row.empty())
            throw std::invalid_argument("TabularMdp: stochastic row must be non-empty");
        sto_rows_[index(s, a)] = std::move(row);
    }

    void set_reward(StateId s, ActionId a, double r) {
        check_state(s);
        check_action(a);
        reward_[index(s, a)] = r;
    }

    void set_terminal(StateId s, bool on = true) {
        check_state(s);
        terminal_[static_cast<std::size_t>(s)] = on ? 1 : 0;
    }

    void set_log_pi0_row(StateId s, std::span<const double> log_row) {
        check_state(s);
        if (static_cast<int>(log_row.size()) != num_actions_)
            throw std::invalid_argument("TabularMdp: pi0 row size mismatch");
        for (ActionId a = 0; a < num_actions_; ++a)
            log_pi0_[index(s, a)] = log_row[static_cast<std::size_t>(a)];
    }

    /// Checks every construction invariant; throws std::invalid_argument on
    /// the first violation. Call once after building.
    void validate() const {
        for (StateId s = 0; s < num_states_; ++s) {
            for (ActionId a = 0; a < num_actions_; ++a) {
                const auto& row = sto_rows_[index(s, a)];
                if (!row.empty()) {
                    double sum = 0.0;
                    for (const Transition& t : row) {
                        if (t.state < 0 || t.state >= num_states_)
                            throw std::invalid_argument("TabularMdp: transition target out of range");
                        if (!(t.prob >= 0.0))
                            throw std::invalid_argument("TabularMdp: negative transition probability");
                        sum += t.prob;
                    }
                    if (std::abs(sum - 1.0) > 1e-12)
                        throw std::invalid_argument(
                            "TabularMdp: stochastic row does not sum to 1 (state " +
                            std::to_string(s) + ", action " + std::to_string(a) + ")");
                }
                if (!std::isfinite(reward_[index(s, a)]))
                    throw std::invalid_argument("TabularMdp: non-finite reward");
                if (!std::isfinite(log_pi0_[index(s, a)]))
                    throw std::invalid_argument("TabularMdp: pi0 must be strictly positive everywhere");
            }
            const double lse = log_sum_exp(log_pi0_row(s));
            if (std::abs(lse) > 1e-9)
                throw std::invalid_argument("TabularMdp: pi0 row is not a normalised distribution");
        }
    }

    bool is_terminal(StateId s) const {
        check_state(s);
        return terminal_[static_cast<std::size_t>(s)] != 0;
    }

    bool has_terminal() const {
        for (std::uint8_t t : terminal_)
            if (t) return true;
        return false;
    }

    /// True when every row is a deterministic (one-hot) transition.
    bool deterministic() const {
        for (const auto& row : sto_rows_)
            if (!row.empty()) return false;
        return true;
    }

    bool row_deterministic(StateId s, ActionId a) const {
        check_state(s);
        check_action(a);
        return sto_rows_[index(s, a)].empty();
    }

    /// Next state of a deterministic row.
    StateId next_state(StateId s, ActionId a) const {
        check_state(s);
        check_action(a);
        if (!sto_rows_[index(s, a)].empty())
            throw std::logic_error("TabularMdp::next_state called on a stochastic row");
        return det_next_[index(s, a)];
    }

    /// Visits (state, prob) successors of (s, a), one-hot for deterministic rows.
    template <class F>
    void for_each_successor(StateId s, ActionId a, F&& f) const {
        check_state(s);
        check_action(a);
        const auto& row = sto_rows_[index(s, a)];
        if (row.empty()) {
            f(det_next_[index(s, a)], 1.0);
        } else {
            for (const Transition& t : row) f(t.state, t.prob);
        }
    }

    double reward(StateId s, ActionId a) const {
        check_state(s);
        check_action(a);
        return reward_[index(s, a)];
    }

    double log_pi0(StateId s, ActionId a) const {
        check_state(s);
        check_action(a);
        return log_pi0_[index(s, a)];
    }

    std::span<const double> log_pi0_row(StateId s) const {
        check_state(s);
        return {log_pi0_.data() + index(s, 0), static_cast<std::size_t>(num_actions_)};
    }

    /**
     * Samples the environment: returns the next state and the reward r(s,a).
     * Deterministic rows are a table lookup; stochastic rows are sampled by
     * inverse CDF from the caller's stream. Stepping from a terminal state
     * is a contract violation and throws.
     */
    std::pair<StateId, double> step(StateId s, ActionId a, Rng& rng) const {
        if (is_terminal(s))
            throw std::logic_error("TabularMdp::step from terminal state " + std::to_string(s));
        check_action(a);
        const auto& row = sto_rows_[index(s, a)];
        if (row.empty())
            return {det_next_[index(s, a)], reward_[index(s, a)]};
        const double u = rng.uniform();
        double cum = 0.0;
        StateId chosen = row.back().state;
        for (const Transition& t : row) {
            cum += t.prob;
            if (u < cum) {
                chosen = t.state;
                break;
            }
        }
        return {chosen, reward_[index(s, a)]};
    }

private:
    std::size_t index(StateId s, ActionId a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

    void check_state(StateId s) const {
        if (s < 0 || s >= num_states_)
            throw std::out_of_range("TabularMdp: state id " + std::to_string(s) + " out of range");
    }

    void check_action(ActionId a) const {
        if (a < 0 || a >= num_actions_)
            throw std::out_of_range("TabularMdp: action id " + std::to_string(a) + " out of range");
    }

    int num_states_;
    int num_actions_;
    std::vector<StateId> det_next_;
    std::vector<std::vector<Transition>> sto_rows_;
    std::vector<double> reward_;
    std::vector<double> log_pi0_;
    std::vector<std::uint8_t> terminal_;
};

/// One environment step of an episode.
struct EpisodeStep {
    StateId state;
    ActionId action;
    double reward;
    StateId next_state;
};

/// Full trajectory of one episode. terminated is false when the step cap
/// expired before a terminal state was reached.
struct EpisodeRecord {
    std::vector<EpisodeStep> steps;
    bool terminated = false;

    int length() const { return static_cast<int>(steps.size()); }
};

} // namespace brl
