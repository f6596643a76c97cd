#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "brl/brl.hpp"

namespace {

std::pair<int, int> parse_size(const std::string& text) {
    const std::size_t x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= text.size())
        throw std::invalid_argument("--size must look like WxH, e.g. 10x10");
    int width = 0;
    int height = 0;
    try {
        std::size_t used = 0;
        width = std::stoi(text.substr(0, x), &used);
        if (used != x) throw std::invalid_argument("");
        const std::string rest = text.substr(x + 1);
        height = std::stoi(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("--size must look like WxH, e.g. 10x10");
    }
    return {width, height};
}

std::string read_text_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

struct RunOptions {
    std::string method = "all";
    int mazes = 100;
    std::string size = "10x10";
    double beta = 1000.0;
    int episodes = 50;
    std::uint64_t seed = 0;
    double step_reward = -0.001;
    double goal_reward = 1.0;
    std::string out = "curves.csv";
    int jobs = 1;
    double rho0 = 1.0;
    double tau = 100.0;
    int max_steps = 10000;
    std::string g_in;
    std::string g_out;
};

int do_run(const RunOptions& opt) {
    const auto [width, height] = parse_size(opt.size);
    brl::ExperimentConfig config;
    config.num_mazes = opt.mazes;
    config.width = width;
    config.height = height;
    config.beta = opt.beta;
    config.episodes_per_maze = opt.episodes;
    config.master_seed = opt.seed;
    config.step_reward = opt.step_reward;
    config.goal_reward = opt.goal_reward;
    config.schedule = {opt.rho0, opt.tau};
    config.max_steps_per_episode = opt.max_steps;
    config.jobs = opt.jobs;

    std::vector<brl::Method> methods;
    if (opt.method == "all")
        methods = {brl::Method::no_prior, brl::Method::one_prior, brl::Method::one_two_prior};
    else
        methods = {brl::parse_method(opt.method)};

    const bool has_pair_method =
        std::find(methods.begin(), methods.end(), brl::Method::one_two_prior) != methods.end();
    if (!opt.g_in.empty() && !has_pair_method)
        throw std::runtime_error("--g-in only applies to method 1-2-prior");
    if (!opt.g_out.empty() && !has_pair_method)
        throw std::runtime_error("--g-out only applies to method 1-2-prior");

    std::optional<std::string> g_in_text;
    if (!opt.g_in.empty()) g_in_text = read_text_file(opt.g_in);

    // validate everything up front so nothing runs on a bad config
    for (brl::Method m : methods) {
        config.method = m;
        config.validate();
    }

    std::vector<brl::CurveRecord> records;
    std::vector<std::uint8_t> final_matrix;
    for (brl::Method m : methods) {
        config.method = m;
        const brl::MethodRunResult result =
            brl::run_method(config, g_in_text ? &*g_in_text : nullptr);
        std::vector<brl::CurveRecord> curve =
            brl::aggregate_curves(result.episode_lengths, brl::method_name(m));
        records.insert(records.end(), curve.begin(), curve.end());
        if (m == brl::Method::one_two_prior) final_matrix = result.final_undo_matrix;
    }
    brl::emit_csv(records, opt.out);
    if (!opt.g_out.empty())
        write_text_file(opt.g_out,
                        brl::format_undo_matrix(final_matrix, brl::maze_action::count));
    std::cout << "wrote " << opt.out << " (" << records.size() << " data rows)\n";
    return 0;
}

struct MazeGenOptions {
    std::string size = "10x10";
    std::uint64_t seed = 0;
    std::string out;
};

int do_maze_gen(const MazeGenOptions& opt) {
    const auto [width, height] = parse_size(opt.size);
    const brl::Maze maze = brl::generate_maze(width, height, opt.seed);
    const std::string text = brl::serialize_maze(maze);
    if (opt.out.empty())
        std::cout << text;
    else
        write_text_file(opt.out, text);
    return 0;
}

int do_maze_check(const std::string& path) {
    const brl::Maze maze = brl::parse_maze(read_text_file(path));
    const std::vector<int> dist = brl::bfs_distances(maze, maze.start);
    const int steps =
        dist[static_cast<std::size_t>(maze.goal.row) * maze.width + maze.goal.col];
    std::cout << "ok: " << maze.width << "x" << maze.height << ", start (" << maze.start.row
              << "," << maze.start.col << "), goal (" << maze.goal.row << "," << maze.goal.col
              << "), shortest path " << steps << " steps\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular B-value reinforcement learning over maze corpora"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand(
        "run", "Run the maze transfer experiment and write learning curves as CSV");
    run->add_option("--method", run_opt.method,
                    "Behaviour method, or 'all' to run every method on the same corpus")
        ->check(CLI::IsMember({"no-prior", "1-prior", "1-2-prior", "all"}))
        ->capture_default_str();
    run->add_option("--mazes", run_opt.mazes, "Number of random mazes")
        ->capture_default_str();
    run->add_option("--size", run_opt.size, "Maze size as WxH")->capture_default_str();
    run->add_option("--beta", run_opt.beta, "Inverse temperature")->capture_default_str();
    run->add_option("--episodes", run_opt.episodes, "Episodes per maze")
        ->capture_default_str();
    run->add_option("--seed", run_opt.seed, "Master seed")->capture_default_str();
    run->add_option("--step-reward", run_opt.step_reward, "Reward per step")
        ->capture_default_str();
    run->add_option("--goal-reward", run_opt.goal_reward, "Extra reward on reaching the goal")
        ->capture_default_str();
    run->add_option("--out", run_opt.out, "Output CSV path")->capture_default_str();
    run->add_option("--jobs", run_opt.jobs,
                    "Worker threads for independent mazes (0 = hardware concurrency)")
        ->capture_default_str();
    run->add_option("--rho0", run_opt.rho0, "Initial learning rate")->capture_default_str();
    run->add_option("--tau", run_opt.tau, "Learning-rate decay constant (inf = constant rate)")
        ->capture_default_str();
    run->add_option("--max-steps", run_opt.max_steps, "Step cap per episode")
        ->capture_default_str();
    run->add_option("--g-in", run_opt.g_in,
                    "Seed the undoing-pair matrix from a file (1-2-prior only)");
    run->add_option("--g-out", run_opt.g_out,
                    "Write the final undoing-pair matrix to a file (1-2-prior only)");

    CLI::App* maze = app.add_subcommand("maze", "Maze utilities");
    maze->require_subcommand(1);

    MazeGenOptions gen_opt;
    CLI::App* gen = maze->add_subcommand("gen", "Generate a maze and print/write its text form");
    gen->add_option("--size", gen_opt.size, "Maze size as WxH")->capture_default_str();
    gen->add_option("--seed", gen_opt.seed, "Layout seed")->capture_default_str();
    gen->add_option("--out", gen_opt.out, "Output path (stdout when absent)");

    std::string check_path;
    CLI::App* check = maze->add_subcommand("check", "Validate a maze text file");
    check->add_option("file", check_path, "Maze text file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return do_run(run_opt);
        if (gen->parsed()) return do_maze_gen(gen_opt);
        if (check->parsed()) return do_maze_check(check_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
