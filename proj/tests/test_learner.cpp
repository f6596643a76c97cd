#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "brl/learner.hpp"
#include "brl/maze.hpp"
#include "support/test_models.hpp"

using brl::LearnerConfig;
using brl::LearnerState;
using brl::LearningSchedule;
using brl::TabularMdp;
namespace act = brl::maze_action;

TEST_CASE("learning rate schedule") {
    const LearningSchedule sch{1.0, 1.0};
    REQUIRE(brl::learning_rate(sch, 0) == 1.0);
    REQUIRE(brl::learning_rate(sch, 1) == 0.5);

    const LearningSchedule defaulted{};
    REQUIRE(brl::learning_rate(defaulted, 0) == 1.0);
    REQUIRE(brl::learning_rate(defaulted, 100) == 0.5);

    const LearningSchedule constant{0.25, std::numeric_limits<double>::infinity()};
    REQUIRE(brl::learning_rate(constant, 0) == 0.25);
    REQUIRE(brl::learning_rate(constant, 1000000) == 0.25);

    REQUIRE_THROWS_AS(brl::learning_rate(defaulted, -1), std::invalid_argument);
}

TEST_CASE("default schedule diverges in sum but not in sum of squares") {
    const LearningSchedule sch{};
    double sum_short = 0.0, sum_long = 0.0, sum_sq = 0.0;
    for (std::int64_t n = 0; n < 1000000; ++n) {
        const double rho = brl::learning_rate(sch, n);
        REQUIRE(rho > 0.0);
        REQUIRE(rho <= 1.0);
        if (n < 1000) sum_short += rho;
        sum_long += rho;
        sum_sq += rho * rho;
    }
    REQUIRE(sum_long > 900.0);            // ~100 ln(N/100): unbounded growth
    REQUIRE(sum_long > 2.0 * sum_short);
    REQUIRE(sum_sq < 101.0);              // bounded by 100^2 * sum 1/(100+n)^2
}

TEST_CASE("learner initialisation and validation") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(4));
    const LearnerState learner = brl::init_learner(compiled.mdp, LearnerConfig{});
    REQUIRE(learner.b.beta() == 1000.0);
    for (brl::StateId s = 0; s < compiled.mdp.num_states(); ++s)
        for (brl::ActionId a = 0; a < 4; ++a) {
            REQUIRE(learner.b.log_b(s, a) == -std::log(4.0));
            REQUIRE(learner.visits(s, a) == 0);
        }
    REQUIRE(learner.b.log_a(compiled.goal) == 0.0);

    LearnerConfig ones;
    ones.init_log_b = 0.0;
    const LearnerState positive = brl::init_learner(compiled.mdp, ones);
    REQUIRE(positive.b.log_b(0, 0) == 0.0);
    REQUIRE(positive.b.log_b(compiled.goal, 0) == -std::log(4.0)); // still pinned

    LearnerConfig bad;
    bad.beta = 0.0;
    REQUIRE_THROWS_AS(brl::init_learner(compiled.mdp, bad), std::invalid_argument);
    bad = {};
    bad.schedule.rho0 = 0.0;
    REQUIRE_THROWS_AS(brl::init_learner(compiled.mdp, bad), std::invalid_argument);
    bad = {};
    bad.schedule.rho0 = 1.5;
    REQUIRE_THROWS_AS(brl::init_learner(compiled.mdp, bad), std::invalid_argument);
    bad = {};
    bad.schedule.tau = 0.0;
    REQUIRE_THROWS_AS(brl::init_learner(compiled.mdp, bad), std::invalid_argument);
    bad = {};
    bad.max_steps_per_episode = 0;
    REQUIRE_THROWS_AS(brl::init_learner(compiled.mdp, bad), std::invalid_argument);
}

TEST_CASE("first visit at rho0=1 replaces the entry with the one-step estimate") {
    const TabularMdp mdp = test_models::two_state_mdp();
    LearnerState learner = brl::init_learner(mdp, LearnerConfig{.beta = 2.0});
    const double expected =
        brl::log_b_estimate(2.0, 1.0, mdp.log_pi0(0, 0), learner.b.log_a(1));
    brl::td_update(learner, mdp, 0, 0, 1.0, 1);
    REQUIRE(learner.b.log_b(0, 0) == expected);
    REQUIRE(learner.visits(0, 0) == 1);
    REQUIRE(learner.visits(0, 1) == 0);
}

TEST_CASE("vanishing learning rate leaves the entry untouched") {
    const TabularMdp mdp = test_models::two_state_mdp();
    LearnerConfig config{.beta = 1.0};
    config.schedule.rho0 = 1e-300; // rho -> 0 limit
    LearnerState learner = brl::init_learner(mdp, config);
    const double before = learner.b.log_b(0, 0);
    brl::td_update(learner, mdp, 0, 0, 1.0, 1);
    REQUIRE(learner.b.log_b(0, 0) == before);
}

TEST_CASE("update is a convex combination in the linear domain") {
    const TabularMdp mdp = test_models::two_state_mdp();
    LearnerConfig config{.beta = 1.0};
    config.schedule = {0.5, 100.0};
    LearnerState learner = brl::init_learner(mdp, config);
    for (int i = 0; i < 200; ++i) {
        const double before = learner.b.log_b(0, 1);
        const double target = brl::log_b_estimate(1.0, -0.001, mdp.log_pi0(0, 1),
                                                  learner.b.log_a(0));
        brl::td_update(learner, mdp, 0, 1, -0.001, 0);
        const double after = learner.b.log_b(0, 1);
        REQUIRE(after >= std::min(before, target) - 1e-12);
        REQUIRE(after <= std::max(before, target) + 1e-12);
        REQUIRE(std::isfinite(after));
    }
}

TEST_CASE("updating a terminal source is rejected") {
    const TabularMdp mdp = test_models::two_state_mdp();
    LearnerState learner = brl::init_learner(mdp, LearnerConfig{.beta = 1.0});
    REQUIRE_THROWS_AS(brl::td_update(learner, mdp, 1, 0, 0.0, 0), std::logic_error);
}

TEST_CASE("masked update sums continuation mass over allowed actions only") {
    // corridor 0 - 1 - goal; retire the two wall bumps at cell 1, then update
    // (0, right) -> 1 and check the target used the two-entry masked row
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(3));
    const TabularMdp& mdp = compiled.mdp;
    brl::PriorMemory mem(4);
    mem.observe_transition(1, act::up, -0.001, 1);
    mem.observe_transition(1, act::down, -0.001, 1);

    LearnerState masked = brl::init_learner(mdp, LearnerConfig{});
    // make cell 1's row uneven so masking visibly changes the logsumexp
    masked.b.set_log_b(1, act::up, 5.0);
    masked.b.set_log_b(1, act::down, 4.0);
    LearnerState unmasked = masked;

    brl::td_update(masked, mdp, 0, act::right, -0.001, 1, &mem);
    brl::td_update(unmasked, mdp, 0, act::right, -0.001, 1);

    const double allowed_mass = brl::log_add_exp(masked.b.log_b(1, act::right),
                                                 masked.b.log_b(1, act::left));
    const double expected =
        brl::log_b_estimate(1000.0, -0.001, mdp.log_pi0(0, act::right), allowed_mass);
    REQUIRE(masked.b.log_b(0, act::right) == expected);
    REQUIRE(unmasked.b.log_b(0, act::right) > masked.b.log_b(0, act::right));
    // a null memory is bitwise the plain form
    LearnerState null_mem = brl::init_learner(mdp, LearnerConfig{});
    null_mem.b.set_log_b(1, act::up, 5.0);
    null_mem.b.set_log_b(1, act::down, 4.0);
    brl::td_update(null_mem, mdp, 0, act::right, -0.001, 1, nullptr);
    REQUIRE(null_mem.b.log_b(0, act::right) == unmasked.b.log_b(0, act::right));
}

TEST_CASE("masked update drops the undoing action for the taken one") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(4));
    const TabularMdp& mdp = compiled.mdp;
    brl::PriorMemory mem(4);
    mem.observe_transition(0, act::right, -0.001, 1); // loop 0 -> 1 -> 0
    mem.observe_transition(1, act::left, -0.001, 0);  // zeroes g[right][left]
    REQUIRE_FALSE(mem.undo_allowed(act::right, act::left));

    LearnerState learner = brl::init_learner(mdp, LearnerConfig{});
    learner.b.set_log_b(1, act::left, 7.0);
    brl::td_update(learner, mdp, 0, act::right, -0.001, 1, &mem);
    double allowed_mass = brl::neg_inf;
    for (brl::ActionId a : {act::up, act::down, act::right}) // left excluded
        allowed_mass = brl::log_add_exp(allowed_mass, learner.b.log_b(1, a));
    REQUIRE(learner.b.log_b(0, act::right) ==
            brl::log_b_estimate(1000.0, -0.001, mdp.log_pi0(0, act::right), allowed_mass));
}

TEST_CASE("fully masked continuation falls back to the whole row") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(3));
    const TabularMdp& mdp = compiled.mdp;
    brl::PriorMemory mem(4);
    mem.observe_transition(1, act::up, -0.001, 1);    // block (1, up)
    mem.observe_transition(1, act::down, -0.001, 1);  // block (1, down)
    mem.observe_transition(1, act::right, -0.001, 2); // synthetic loops zero
    mem.observe_transition(2, act::right, -0.001, 1); //   g[right][right]
    mem.observe_transition(0, act::right, -0.001, 1); // and g[right][left]
    mem.observe_transition(1, act::left, -0.001, 0);
    for (brl::ActionId a = 0; a < 4; ++a)
        REQUIRE(mem.prior_f(1, a, act::right) == 0);

    LearnerState with_mem = brl::init_learner(mdp, LearnerConfig{});
    LearnerState without = with_mem;
    brl::td_update(with_mem, mdp, 0, act::right, -0.001, 1, &mem);
    brl::td_update(without, mdp, 0, act::right, -0.001, 1);
    REQUIRE(with_mem.b.log_b(0, act::right) == without.b.log_b(0, act::right));
}

TEST_CASE("terminal continuation ignores the mask") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(2));
    const TabularMdp& mdp = compiled.mdp;
    brl::PriorMemory mem(4);
    // record blocks on the goal row itself; the pinned unit mass must be
    // used whole regardless
    mem.observe_transition(compiled.goal, act::up, -0.001, compiled.goal);
    mem.observe_transition(compiled.goal, act::down, -0.001, compiled.goal);
    REQUIRE(mem.prior_f(compiled.goal, act::up, act::right) == 0);

    LearnerState with_mem = brl::init_learner(mdp, LearnerConfig{});
    LearnerState without = with_mem;
    brl::td_update(with_mem, mdp, 0, act::right, 0.999, compiled.goal, &mem);
    brl::td_update(without, mdp, 0, act::right, 0.999, compiled.goal);
    REQUIRE(with_mem.b.log_b(0, act::right) == without.b.log_b(0, act::right));
    REQUIRE(with_mem.b.log_b(0, act::right) ==
            brl::log_b_estimate(1000.0, 0.999, mdp.log_pi0(0, act::right), 0.0));
}

TEST_CASE("terminal rows stay pinned through learning") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(3));
    LearnerState learner = brl::init_learner(compiled.mdp, LearnerConfig{});
    brl::Rng rng(4);
    for (int e = 0; e < 50; ++e)
        brl::run_episode(compiled.mdp, learner, brl::make_bayes_policy(learner, nullptr),
                         nullptr, compiled.start, rng);
    REQUIRE(learner.b.log_a(compiled.goal) == 0.0);
    REQUIRE(std::exp(learner.b.log_a(compiled.goal)) == 1.0);
}

TEST_CASE("stochastic updates converge to the exact table") {
    const TabularMdp mdp = test_models::two_state_mdp();
    const brl::BTable exact = brl::solve_exact_B(mdp, 1.0, 1e-12);
    LearnerState learner = brl::init_learner(mdp, LearnerConfig{.beta = 1.0});
    brl::Rng rng(2024);
    brl::StateId s = 0;
    for (int update = 0; update < 100000; ++update) {
        if (mdp.is_terminal(s)) s = 0;
        const brl::ActionId a = static_cast<brl::ActionId>(rng.uniform_int(2));
        const auto [next, r] = mdp.step(s, a, rng);
        brl::td_update(learner, mdp, s, a, r, next);
        s = next;
    }
    REQUIRE(learner.b.log_b(0, 0) == Catch::Approx(exact.log_b(0, 0)).margin(1e-3));
    REQUIRE(learner.b.log_b(0, 1) == Catch::Approx(exact.log_b(0, 1)).margin(1e-3));
}

TEST_CASE("full-replacement backward sweeps reproduce the exact solver bitwise") {
    // with rho = 1 everywhere the update IS the backward recursion, so
    // mirroring the solver's sweep order and count must give identical bits
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::open_room(3, 3));
    const brl::TabularMdp& mdp = compiled.mdp;
    const double beta = 100.0;

    brl::SolveStats stats;
    const brl::BTable exact = brl::solve_exact_B(mdp, beta, 1e-10, 0, &stats);

    LearnerConfig config{.beta = beta};
    config.schedule = {1.0, std::numeric_limits<double>::infinity()}; // rho = 1 always
    LearnerState learner = brl::init_learner(mdp, config);
    for (int sweep = 0; sweep < stats.sweeps; ++sweep)
        for (brl::StateId s = 0; s < mdp.num_states(); ++s) {
            if (mdp.is_terminal(s)) continue;
            for (brl::ActionId a = 0; a < mdp.num_actions(); ++a)
                brl::td_update(learner, mdp, s, a, mdp.reward(s, a), mdp.next_state(s, a));
        }

    for (brl::StateId s = 0; s < mdp.num_states(); ++s)
        for (brl::ActionId a = 0; a < mdp.num_actions(); ++a)
            REQUIRE(learner.b.log_b(s, a) == exact.log_b(s, a));
}

TEST_CASE("greedy policy on a solved table finishes the two-cell maze in one step") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(2));
    const brl::BTable solved = brl::solve_exact_B(compiled.mdp, 1000.0, 1e-10);
    LearnerState learner = brl::init_learner(compiled.mdp, LearnerConfig{});
    brl::Rng rng(1);
    const brl::EpisodeRecord record = brl::run_episode(
        compiled.mdp, learner,
        [&](brl::StateId s, std::optional<brl::ActionId>) {
            return brl::optimal_policy_from_B(solved, s);
        },
        nullptr, compiled.start, rng);
    REQUIRE(record.terminated);
    REQUIRE(record.length() == 1);
    REQUIRE(record.steps[0].action == act::right);
}

TEST_CASE("step cap ends unsolvable episodes with terminated=false") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(20));
    LearnerConfig config;
    config.max_steps_per_episode = 10;
    LearnerState learner = brl::init_learner(compiled.mdp, config);
    brl::Rng rng(1);
    brl::ActionDistribution left_only;
    left_only.probs = {0.0, 0.0, 0.0, 1.0};
    const brl::EpisodeRecord record = brl::run_episode(
        compiled.mdp, learner,
        [&](brl::StateId, std::optional<brl::ActionId>) { return left_only; }, nullptr,
        compiled.start, rng);
    REQUIRE_FALSE(record.terminated);
    REQUIRE(record.length() == 10);
}

TEST_CASE("episodes from a terminal start are rejected") {
    const TabularMdp mdp = test_models::two_state_mdp();
    LearnerState learner = brl::init_learner(mdp, LearnerConfig{.beta = 1.0});
    brl::Rng rng(1);
    REQUIRE_THROWS_AS(brl::run_episode(mdp, learner,
                                       brl::make_bayes_policy(learner, nullptr), nullptr, 1,
                                       rng),
                      std::logic_error);
}

TEST_CASE("episode loop feeds the prior memory online") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(test_models::corridor_maze(6));
    LearnerState learner = brl::init_learner(compiled.mdp, LearnerConfig{});
    brl::PriorMemory mem(4);
    brl::Rng rng(9);
    for (int e = 0; e < 3; ++e)
        brl::run_episode(compiled.mdp, learner, brl::make_bayes_policy(learner, &mem), &mem,
                         compiled.start, rng);
    // a corridor walk bumps into walls essentially immediately
    REQUIRE_FALSE(mem.blocked_pairs().empty());
    for (const auto& [s, a] : mem.blocked_pairs())
        REQUIRE(compiled.mdp.next_state(s, a) == s);
}

TEST_CASE("identical seeds reproduce identical episode sequences") {
    const brl::CompiledMaze compiled = brl::maze_to_mdp(brl::generate_maze(6, 6, 3));
    std::vector<int> lengths_a, lengths_b;
    for (std::vector<int>* lengths : {&lengths_a, &lengths_b}) {
        LearnerState learner = brl::init_learner(compiled.mdp, LearnerConfig{});
        brl::Rng rng(77);
        for (int e = 0; e < 20; ++e)
            lengths->push_back(brl::run_episode(compiled.mdp, learner,
                                                brl::make_bayes_policy(learner, nullptr),
                                                nullptr, compiled.start, rng)
                                   .length());
    }
    REQUIRE(lengths_a == lengths_b);
    REQUIRE(lengths_a.size() == 20);
}
