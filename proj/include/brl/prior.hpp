#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "brl/mdp.hpp"

namespace brl {

/// Which of the two transition rules the memory applies. The undoing-pair
/// rule is universal: a zeroed (prev, action) pair is masked at every state.
struct PriorOptions {
    bool block_rule = true;
    bool undo_rule = true;
};

/// Text form of a (num_actions x num_actions) 0/1 matrix stored row-major
/// (row = previous action): entries separated by single spaces, one row per
/// line.
inline std::string format_undo_matrix(const std::vector<std::uint8_t>& matrix,
                                      int num_actions) {
    if (static_cast<std::size_t>(num_actions) * num_actions != matrix.size())
        throw std::invalid_argument("format_undo_matrix: matrix shape mismatch");
    std::string out;
    for (int prev = 0; prev < num_actions; ++prev) {
        for (int a = 0; a < num_actions; ++a) {
            if (a > 0) out.push_back(' ');
            out.push_back(matrix[static_cast<std::size_t>(prev) * num_actions + a] ? '1' : '0');
        }
        out.push_back('\n');
    }
    return out;
}

/**
 * Accumulated rule knowledge used to mask actions during behaviour.
 *
 * Two deterministic rules populate it from observed transitions:
 *  - block rule (task-local): an action that provably leaves the state
 *    unchanged without positive reward is blocked at that state;
 *  - undo rule (task-independent): a pair of consecutive actions that
 *    provably returns to the starting state without positive reward is
 *    recorded in the binary matrix undo_allowed, and the second action is
 *    masked whenever the first was just taken — at every state.
 *
 * Knowledge only accumulates: undo_allowed entries move 1 -> 0 and the
 * blocked set only grows within a task. transfer() starts the next task
 * keeping undo_allowed (action semantics persist across tasks) while
 * dropping blocked pairs (state indices are task-local).
 */
class PriorMemory {
public:
    explicit PriorMemory(int num_actions, PriorOptions options = {})
        : num_actions_(num_actions), options_(options) {
        if (num_actions < 1)
            throw std::invalid_argument("PriorMemory: num_actions must be >= 1");
        undo_allowed_.assign(static_cast<std::size_t>(num_actions) * num_actions, 1);
    }

    int num_actions() const { return num_actions_; }
    const PriorOptions& options() const { return options_; }

    /// Feed one environment step, in trajectory order.
    void observe_transition(StateId s, ActionId a, double r, StateId s_next) {
        check_action(a);
        if (options_.block_rule && s_next == s && r <= 0.0)
            blocked_.insert(key(s, a));
        if (options_.undo_rule && window_ && window_->to == s && s != window_->from &&
            s_next == window_->from && window_->reward <= 0.0 && r <= 0.0)
            undo_allowed_[static_cast<std::size_t>(window_->action) * num_actions_ + a] = 0;
        window_ = Window{s, a, s_next, r};
    }

    /// 0 if the rules exclude taking a at s (after prev_action), else 1.
    int prior_f(StateId s, ActionId a, std::optional<ActionId> prev_action = std::nullopt) const {
        check_action(a);
        if (blocked_.count(key(s, a))) return 0;
        if (prev_action) {
            check_action(*prev_action);
            if (!undo_allowed_[static_cast<std::size_t>(*prev_action) * num_actions_ + a])
                return 0;
        }
        return 1;
    }

    /// Clears the two-step detection window. Call at every episode start so
    /// a stale window cannot pair the last step of one episode with the
    /// first step of the next.
    void begin_episode() { window_.reset(); }

    /// Memory for the next task: undo_allowed carries over, task-local
    /// blocked pairs and the window do not.
    PriorMemory transfer() const {
        PriorMemory next(num_actions_, options_);
        next.undo_allowed_ = undo_allowed_;
        return next;
    }

    bool undo_allowed(ActionId prev, ActionId a) const {
        check_action(prev);
        check_action(a);
        return undo_allowed_[static_cast<std::size_t>(prev) * num_actions_ + a] != 0;
    }

    const std::vector<std::uint8_t>& undo_matrix() const { return undo_allowed_; }

    std::vector<std::pair<StateId, ActionId>> blocked_pairs() const {
        std::vector<std::pair<StateId, ActionId>> out;
        out.reserve(blocked_.size());
        for (std::int64_t k : blocked_)
            out.emplace_back(static_cast<StateId>(k / num_actions_),
                             static_cast<ActionId>(k % num_actions_));
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Text form of undo_allowed, see format_undo_matrix.
    std::string serialize_undo_matrix() const {
        return format_undo_matrix(undo_allowed_, num_actions_);
    }

    /// Replaces undo_allowed from the text form; throws std::invalid_argument
    /// on wrong shape or symbols other than 0/1.
    void load_undo_matrix(std::string_view text) {
        std::vector<std::uint8_t> loaded;
        loaded.reserve(undo_allowed_.size());
        std::istringstream in{std::string(text)};
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string tok;
            int cols = 0;
            while (row >> tok) {
                if (tok == "0")
                    loaded.push_back(0);
                else if (tok == "1")
                    loaded.push_back(1);
                else
                    throw std::invalid_argument("load_undo_matrix: entry must be 0 or 1, got '" +
                                                tok + "'");
                ++cols;
            }
            if (cols != num_actions_)
                throw std::invalid_argument("load_undo_matrix: expected " +
                                            std::to_string(num_actions_) + " columns, got " +
                                            std::to_string(cols));
            ++rows;
        }
        if (rows != num_actions_)
            throw std::invalid_argument("load_undo_matrix: expected " +
                                        std::to_string(num_actions_) + " rows, got " +
                                        std::to_string(rows));
        undo_allowed_ = std::move(loaded);
    }

private:
    struct Window {
        StateId from;
        ActionId action;
        StateId to;
        double reward;
    };

    std::int64_t key(StateId s, ActionId a) const {
        return static_cast<std::int64_t>(s) * num_actions_ + a;
    }

    void check_action(ActionId a) const {
        if (a < 0 || a >= num_actions_)
            throw std::out_of_range("PriorMemory: action id out of range");
    }

    int num_actions_;
    PriorOptions options_;
    std::vector<std::uint8_t> undo_allowed_;
    std::unordered_set<std::int64_t> blocked_;
    std::optional<Window> window_;
};

} // namespace brl
