#pragma once

#include <cmath>
#include <vector>

#include "brl/maze.hpp"
#include "brl/mdp.hpp"
#include "brl/random.hpp"

namespace test_models {

/// Two states {s0, goal}; a0: s0 -> goal with reward 1, a1: s0 -> s0 with
/// reward -0.001; uniform baseline policy. Closed forms (B0 = B(s0,a0),
/// B1 = B(s0,a1)):
///   B0 = 0.5 e^{beta}
///   B1 = 0.5 e^{-0.001 beta} B0 / (1 - 0.5 e^{-0.001 beta})
inline brl::TabularMdp two_state_mdp() {
    brl::TabularMdp mdp(2, 2);
    mdp.set_transition(0, 0, 1);
    mdp.set_reward(0, 0, 1.0);
    mdp.set_transition(0, 1, 0);
    mdp.set_reward(0, 1, -0.001);
    mdp.set_terminal(1);
    mdp.validate();
    return mdp;
}

inline double two_state_log_b0(double beta) { return std::log(0.5) + beta; }

inline double two_state_log_b1(double beta) {
    const double decay = 0.5 * std::exp(-0.001 * beta);
    return std::log(decay) + two_state_log_b0(beta) - std::log1p(-decay);
}

/// Straight corridor of `length` cells, goal at the right end: a 1 x length
/// maze with no interior walls.
inline brl::Maze corridor_maze(int length) {
    brl::Maze maze;
    maze.width = length;
    maze.height = 1;
    maze.wall.assign(static_cast<std::size_t>(length), 0);
    maze.start = {0, 0};
    maze.goal = {0, length - 1};
    return maze;
}

/// Fully open room (no interior walls), start top-left, goal bottom-right.
inline brl::Maze open_room(int width, int height) {
    brl::Maze maze;
    maze.width = width;
    maze.height = height;
    maze.wall.assign(static_cast<std::size_t>(width) * height, 0);
    maze.start = {0, 0};
    maze.goal = {height - 1, width - 1};
    return maze;
}

/**
 * Random episodic MDP with all transitions strictly increasing in state id,
 * so every trajectory terminates within num_states - 1 steps. The last
 * state is terminal. Rows are a random mix of deterministic and stochastic
 * (2-3 successors); rewards are uniform in [-1, 1]; the baseline policy of
 * each state is either uniform or a random positive distribution.
 */
inline brl::TabularMdp random_dag_mdp(int num_states, int num_actions, std::uint64_t seed) {
    brl::Rng rng(seed);
    brl::TabularMdp mdp(num_states, num_actions);
    const brl::StateId last = num_states - 1;
    for (brl::StateId s = 0; s + 1 < num_states; ++s) {
        for (brl::ActionId a = 0; a < num_actions; ++a) {
            const int room = last - s; // successors drawn from s+1 .. last
            const bool stochastic = room >= 2 && rng.uniform() < 0.5;
            if (!stochastic) {
                mdp.set_transition(s, a, s + 1 + rng.uniform_int(room));
            } else {
                const int branches = 2 + (room >= 3 ? rng.uniform_int(2) : 0);
                std::vector<brl::StateId> targets;
                while (static_cast<int>(targets.size()) < branches) {
                    const brl::StateId t = s + 1 + rng.uniform_int(room);
                    bool seen = false;
                    for (brl::StateId u : targets) seen = seen || u == t;
                    if (!seen) targets.push_back(t);
                }
                std::vector<brl::Transition> row;
                double remaining = 1.0;
                for (std::size_t i = 0; i + 1 < targets.size(); ++i) {
                    const double p = remaining * (0.2 + 0.6 * rng.uniform());
                    row.push_back({targets[i], p});
                    remaining -= p;
                }
                row.push_back({targets.back(), remaining});
                mdp.set_transition(s, a, row);
            }
            mdp.set_reward(s, a, 2.0 * rng.uniform() - 1.0);
        }
        if (rng.uniform() < 0.5) {
            std::vector<double> w(static_cast<std::size_t>(num_actions));
            double sum = 0.0;
            for (double& x : w) {
                x = 0.1 + rng.uniform();
                sum += x;
            }
            std::vector<double> log_row(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) log_row[i] = std::log(w[i] / sum);
            mdp.set_log_pi0_row(s, log_row);
        }
    }
    mdp.set_terminal(last);
    mdp.validate();
    return mdp;
}

} // namespace test_models
