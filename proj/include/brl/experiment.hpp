#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "brl/learner.hpp"
#include "brl/maze.hpp"
#include "brl/prior.hpp"
#include "brl/random.hpp"

namespace brl {

/// The three behaviour variants: plain B-proportional sampling, the block
/// rule alone, and block + undoing-pair rules with the pair matrix carried
/// across mazes.
enum class Method { no_prior, one_prior, one_two_prior };

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::no_prior: return "no-prior";
        case Method::one_prior: return "1-prior";
        case Method::one_two_prior: return "1-2-prior";
    }
    throw std::invalid_argument("method_name: unknown method");
}

inline Method parse_method(std::string_view name) {
    if (name == "no-prior") return Method::no_prior;
    if (name == "1-prior") return Method::one_prior;
    if (name == "1-2-prior") return Method::one_two_prior;
    throw std::invalid_argument("parse_method: unknown method '" + std::string(name) +
                                "' (expected no-prior, 1-prior, or 1-2-prior)");
}

struct ExperimentConfig {
    Method method = Method::no_prior;
    int num_mazes = 100;
    int width = 10;
    int height = 10;
    double beta = 1000.0;
    int episodes_per_maze = 50;
    std::uint64_t master_seed = 0;
    double step_reward = -0.001;
    double goal_reward = 1.0;
    LearningSchedule schedule{};
    int max_steps_per_episode = 10000;
    int jobs = 1; // worker threads; 0 = hardware concurrency

    void validate() const {
        if (num_mazes < 1) throw std::invalid_argument("config: num_mazes must be >= 1");
        if (width < 2 || height < 2)
            throw std::invalid_argument("config: maze size must be at least 2x2");
        if (!std::isfinite(beta) || beta <= 0.0)
            throw std::invalid_argument("config: beta must be finite and positive");
        if (episodes_per_maze < 1)
            throw std::invalid_argument("config: episodes must be >= 1");
        if (!std::isfinite(step_reward) || !std::isfinite(goal_reward))
            throw std::invalid_argument("config: rewards must be finite");
        if (!(schedule.rho0 > 0.0) || schedule.rho0 > 1.0)
            throw std::invalid_argument("config: rho0 must be in (0,1]");
        if (!(schedule.tau > 0.0))
            throw std::invalid_argument("config: tau must be positive (or +inf)");
        if (max_steps_per_episode < 1)
            throw std::invalid_argument("config: max-steps must be >= 1");
        if (jobs < 0) throw std::invalid_argument("config: jobs must be >= 0");
    }
};

/// Seed streams: maze layout and run randomness are separate functions of
/// (master_seed, maze_index) only, so every method faces the identical maze
/// corpus and identical sampling streams.
inline std::uint64_t maze_seed(std::uint64_t master_seed, int maze_index) {
    return derive_seed(master_seed, 2 * static_cast<std::uint64_t>(maze_index));
}

inline std::uint64_t run_seed(std::uint64_t master_seed, int maze_index) {
    return derive_seed(master_seed, 2 * static_cast<std::uint64_t>(maze_index) + 1);
}

/// Episode lengths per maze (outer index: maze, inner: episode), plus the
/// final undoing-pair matrix for the method that accumulates one
/// (empty for the other methods).
struct MethodRunResult {
    std::vector<std::vector<int>> episode_lengths;
    std::vector<std::uint8_t> final_undo_matrix;
};

namespace detail {

inline std::vector<int> run_one_maze(const ExperimentConfig& config, int maze_index,
                                     PriorMemory* mem) {
    const Maze maze =
        generate_maze(config.width, config.height, maze_seed(config.master_seed, maze_index));
    const CompiledMaze compiled = maze_to_mdp(maze, config.step_reward, config.goal_reward);
    LearnerConfig lc{config.beta, config.schedule, config.max_steps_per_episode, {}};
    LearnerState learner = init_learner(compiled.mdp, lc);
    Rng rng(run_seed(config.master_seed, maze_index));
    std::vector<int> lengths;
    lengths.reserve(static_cast<std::size_t>(config.episodes_per_maze));
    for (int e = 0; e < config.episodes_per_maze; ++e) {
        const EpisodeRecord record = run_episode(
            compiled.mdp, learner, make_bayes_policy(learner, mem), mem, compiled.start, rng);
        lengths.push_back(record.length());
    }
    return lengths;
}

/// Runs f(maze_index) for every index with `jobs` workers pulling from a
/// shared counter. Results land in caller-owned slots keyed by index, so
/// output is independent of scheduling.
template <class F>
void for_each_maze_index(int num_mazes, int jobs, F&& f) {
    if (jobs <= 1) {
        for (int m = 0; m < num_mazes; ++m) f(m);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int m = next.fetch_add(1);
            if (m >= num_mazes) return;
            try {
                f(m);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min(jobs, num_mazes);
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace detail

/**
 * Runs one method over the whole maze corpus. Maze layouts and sampling
 * streams depend only on (master_seed, maze_index), never on the method or
 * on scheduling, so results are bit-reproducible and directly comparable
 * across methods.
 *
 * no-prior and 1-prior have fully independent mazes and run them
 * concurrently when jobs != 1. 1-2-prior chains the pair matrix from maze
 * to maze (transfer keeps the matrix, drops task-local blocks), which
 * forces sequential execution; initial_undo_matrix, when given, seeds the
 * first maze's matrix (text form from PriorMemory::serialize_undo_matrix).
 */
inline MethodRunResult run_method(const ExperimentConfig& config,
                                  const std::string* initial_undo_matrix = nullptr) {
    config.validate();
    const int jobs = config.jobs == 0
                         ? std::max(1u, std::thread::hardware_concurrency())
                         : config.jobs;

    MethodRunResult result;
    result.episode_lengths.assign(static_cast<std::size_t>(config.num_mazes), {});

    switch (config.method) {
        case Method::no_prior: {
            detail::for_each_maze_index(config.num_mazes, jobs, [&](int m) {
                result.episode_lengths[static_cast<std::size_t>(m)] =
                    detail::run_one_maze(config, m, nullptr);
            });
            break;
        }
        case Method::one_prior: {
            detail::for_each_maze_index(config.num_mazes, jobs, [&](int m) {
                PriorMemory mem(maze_action::count, {.block_rule = true, .undo_rule = false});
                result.episode_lengths[static_cast<std::size_t>(m)] =
                    detail::run_one_maze(config, m, &mem);
            });
            break;
        }
        case Method::one_two_prior: {
            PriorMemory mem(maze_action::count, {.block_rule = true, .undo_rule = true});
            if (initial_undo_matrix) mem.load_undo_matrix(*initial_undo_matrix);
            for (int m = 0; m < config.num_mazes; ++m) {
                if (m > 0) mem = mem.transfer();
                result.episode_lengths[static_cast<std::size_t>(m)] =
                    detail::run_one_maze(config, m, &mem);
            }
            result.final_undo_matrix = mem.undo_matrix();
            break;
        }
    }
    return result;
}

/// One row of the aggregated learning curve.
struct CurveRecord {
    std::string method;
    int episode_index = 0;
    double mean_length = 0.0;
    double stderr_length = 0.0;
    int num_mazes = 0;
};

/**
 * Per-episode mean and standard error of episode length across mazes.
 * Standard error is the sample standard deviation (n-1 denominator) over
 * sqrt(n); it is 0 when only one maze is present. Ragged inputs are
 * rejected.
 */
inline std::vector<CurveRecord> aggregate_curves(
    const std::vector<std::vector<int>>& episode_lengths, std::string_view method) {
    std::vector<CurveRecord> records;
    if (episode_lengths.empty()) return records;
    const std::size_t episodes = episode_lengths.front().size();
    for (const auto& row : episode_lengths)
        if (row.size() != episodes)
            throw std::invalid_argument("aggregate_curves: ragged episode matrix");
    const int n = static_cast<int>(episode_lengths.size());
    records.reserve(episodes);
    for (std::size_t e = 0; e < episodes; ++e) {
        double mean = 0.0;
        for (const auto& row : episode_lengths) mean += row[e];
        mean /= n;
        double stderr_len = 0.0;
        if (n > 1) {
            double ss = 0.0;
            for (const auto& row : episode_lengths) {
                const double d = row[e] - mean;
                ss += d * d;
            }
            stderr_len = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
        }
        records.push_back({std::string(method), static_cast<int>(e), mean, stderr_len, n});
    }
    return records;
}

namespace detail {

inline std::string format_double(double x) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

} // namespace detail

/// Renders records as CSV with header
/// `method,episode_index,mean_length,stderr_length,num_mazes`, rows ordered
/// by (method, episode_index). Doubles use the shortest round-trip form, so
/// the bytes are a pure function of the values.
inline std::string format_csv(std::vector<CurveRecord> records) {
    std::sort(records.begin(), records.end(), [](const CurveRecord& a, const CurveRecord& b) {
        if (a.method != b.method) return a.method < b.method;
        return a.episode_index < b.episode_index;
    });
    std::string out = "method,episode_index,mean_length,stderr_length,num_mazes\n";
    for (const CurveRecord& r : records) {
        out += r.method;
        out.push_back(',');
        out += std::to_string(r.episode_index);
        out.push_back(',');
        out += detail::format_double(r.mean_length);
        out.push_back(',');
        out += detail::format_double(r.stderr_length);
        out.push_back(',');
        out += std::to_string(r.num_mazes);
        out.push_back('\n');
    }
    return out;
}

inline void emit_csv(const std::vector<CurveRecord>& records, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");
    const std::string text = format_csv(records);
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file)
        throw std::runtime_error("emit_csv: write to '" + path + "' failed");
}

} // namespace brl
