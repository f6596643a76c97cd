#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "brl/mdp.hpp"
#include "brl/random.hpp"

namespace brl {

struct Cell {
    int row;
    int col;

    bool operator==(const Cell&) const = default;
};

/// Action ids shared by every grid-world here: up, down, right, left.
namespace maze_action {
inline constexpr ActionId up = 0;
inline constexpr ActionId down = 1;
inline constexpr ActionId right = 2;
inline constexpr ActionId left = 3;
inline constexpr int count = 4;
} // namespace maze_action

/**
 * Rectangular grid maze. wall is row-major, 1 = wall, 0 = free; start and
 * goal always sit on free cells.
 */
struct Maze {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> wall;
    Cell start{0, 0};
    Cell goal{0, 0};

    bool in_bounds(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width;
    }

    bool is_wall(int row, int col) const {
        return wall[static_cast<std::size_t>(row) * width + col] != 0;
    }

    bool operator==(const Maze&) const = default;
};

namespace detail {

inline void step_delta(ActionId a, int& drow, int& dcol) {
    switch (a) {
        case maze_action::up: drow = -1; dcol = 0; return;
        case maze_action::down: drow = 1; dcol = 0; return;
        case maze_action::right: drow = 0; dcol = 1; return;
        case maze_action::left: drow = 0; dcol = -1; return;
        default: throw std::out_of_range("step_delta: unknown maze action");
    }
}

} // namespace detail

/// BFS shortest-path lengths (in steps) from `from` to every cell; -1 for
/// walls and unreachable cells.
inline std::vector<int> bfs_distances(const Maze& maze, Cell from) {
    if (!maze.in_bounds(from.row, from.col) || maze.is_wall(from.row, from.col))
        throw std::invalid_argument("bfs_distances: source must be a free in-bounds cell");
    std::vector<int> dist(static_cast<std::size_t>(maze.width) * maze.height, -1);
    auto at = [&](int r, int c) -> int& {
        return dist[static_cast<std::size_t>(r) * maze.width + c];
    };
    at(from.row, from.col) = 0;
    std::deque<Cell> queue{from};
    while (!queue.empty()) {
        const Cell cur = queue.front();
        queue.pop_front();
        for (ActionId a = 0; a < maze_action::count; ++a) {
            int dr = 0, dc = 0;
            detail::step_delta(a, dr, dc);
            const int nr = cur.row + dr;
            const int nc = cur.col + dc;
            if (!maze.in_bounds(nr, nc) || maze.is_wall(nr, nc) || at(nr, nc) >= 0) continue;
            at(nr, nc) = at(cur.row, cur.col) + 1;
            queue.push_back({nr, nc});
        }
    }
    return dist;
}

/**
 * Generates a maze whose free cells form a spanning tree (every pair of
 * free cells is connected by exactly one simple corridor path).
 *
 * The backtracker carves on the odd lattice {1, 3, 5, ...}^2, which covers
 * the whole rectangle only for odd dimensions. For even widths/heights the
 * bottom/right border would otherwise stay solid, so the goal corner is
 * bridged into the lattice with at most two extra cells, carved so the
 * tree property is preserved (each bridge cell attaches by exactly one
 * opening). Start is the top-left cell, goal the bottom-right.
 */
inline Maze generate_maze(int width, int height, std::uint64_t seed) {
    if (width < 2 || height < 2)
        throw std::invalid_argument("generate_maze: dimensions must be at least 2x2");

    Maze maze;
    maze.width = width;
    maze.height = height;
    maze.wall.assign(static_cast<std::size_t>(width) * height, 1);
    auto carve = [&](int r, int c) {
        maze.wall[static_cast<std::size_t>(r) * width + c] = 0;
    };

    // Depth-first backtracker over lattice nodes (odd coordinates shifted
    // to start at 0, stride 2), knocking out the wall between neighbours.
    const int lat_rows = (height + 1) / 2;
    const int lat_cols = (width + 1) / 2;
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(lat_rows) * lat_cols, 0);
    auto seen = [&](int lr, int lc) -> std::uint8_t& {
        return visited[static_cast<std::size_t>(lr) * lat_cols + lc];
    };

    Rng rng(seed);
    std::vector<std::pair<int, int>> stack{{0, 0}};
    seen(0, 0) = 1;
    carve(0, 0);
    while (!stack.empty()) {
        const auto [lr, lc] = stack.back();
        int options[4];
        int num_options = 0;
        constexpr int dr[4] = {-1, 1, 0, 0};
        constexpr int dc[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int nr = lr + dr[d];
            const int nc = lc + dc[d];
            if (nr < 0 || nr >= lat_rows || nc < 0 || nc >= lat_cols || seen(nr, nc)) continue;
            options[num_options++] = d;
        }
        if (num_options == 0) {
            stack.pop_back();
            continue;
        }
        const int d = options[rng.uniform_int(num_options)];
        const int nr = lr + dr[d];
        const int nc = lc + dc[d];
        seen(nr, nc) = 1;
        carve(2 * nr, 2 * nc);
        carve(lr + nr, lc + nc); // wall cell between the two lattice nodes
        stack.push_back({nr, nc});
    }

    // Bridge the goal corner into the lattice when a dimension is even.
    const bool even_w = (width % 2) == 0;
    const bool even_h = (height % 2) == 0;
    const int gr = height - 1;
    const int gc = width - 1;
    if (even_w && even_h) {
        carve(gr, gc);
        carve(gr - 1, gc); // attaches the corner column-wise to lattice row
    } else if (even_w) {
        carve(gr, gc); // gr is a lattice row; (gr, gc-1) is already free
    } else if (even_h) {
        carve(gr, gc); // gc is a lattice column; (gr-1, gc) is already free
    }

    maze.start = {0, 0};
    maze.goal = {gr, gc};
    return maze;
}

/**
 * Parses the text form: one row per line, '#' wall, '.' free, 'S' start,
 * 'G' goal. Requires a rectangle, exactly one S and one G, and a path from
 * S to G; throws std::invalid_argument otherwise.
 */
inline Maze parse_maze(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        pos = end + 1;
    }
    if (lines.empty())
        throw std::invalid_argument("parse_maze: empty input");

    Maze maze;
    maze.height = static_cast<int>(lines.size());
    maze.width = static_cast<int>(lines[0].size());
    maze.wall.assign(static_cast<std::size_t>(maze.width) * maze.height, 0);
    int starts = 0;
    int goals = 0;
    for (int r = 0; r < maze.height; ++r) {
        if (static_cast<int>(lines[static_cast<std::size_t>(r)].size()) != maze.width)
            throw std::invalid_argument("parse_maze: ragged rows");
        for (int c = 0; c < maze.width; ++c) {
            const char ch = lines[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            switch (ch) {
                case '#':
                    maze.wall[static_cast<std::size_t>(r) * maze.width + c] = 1;
                    break;
                case '.':
                    break;
                case 'S':
                    maze.start = {r, c};
                    ++starts;
                    break;
                case 'G':
                    maze.goal = {r, c};
                    ++goals;
                    break;
                default:
                    throw std::invalid_argument(std::string("parse_maze: unknown symbol '") + ch + "'");
            }
        }
    }
    if (starts != 1)
        throw std::invalid_argument("parse_maze: expected exactly one S, found " + std::to_string(starts));
    if (goals != 1)
        throw std::invalid_argument("parse_maze: expected exactly one G, found " + std::to_string(goals));

    const std::vector<int> dist = bfs_distances(maze, maze.start);
    if (dist[static_cast<std::size_t>(maze.goal.row) * maze.width + maze.goal.col] < 0)
        throw std::invalid_argument("parse_maze: goal is unreachable from start");
    return maze;
}

/// Inverse of parse_maze; every row ends with '\n'.
inline std::string serialize_maze(const Maze& maze) {
    std::string out;
    out.reserve(static_cast<std::size_t>(maze.height) * (maze.width + 1));
    for (int r = 0; r < maze.height; ++r) {
        for (int c = 0; c < maze.width; ++c) {
            char ch = maze.is_wall(r, c) ? '#' : '.';
            if (Cell{r, c} == maze.start) ch = 'S';
            if (Cell{r, c} == maze.goal) ch = 'G';
            out.push_back(ch);
        }
        out.push_back('\n');
    }
    return out;
}

/// A maze lowered to a TabularMdp plus the cell/state correspondence.
struct CompiledMaze {
    TabularMdp mdp;
    StateId start;
    StateId goal;
    std::vector<StateId> cell_to_state;  // -1 for walls
    std::vector<Cell> state_to_cell;
};

/**
 * Compiles a maze into its episodic MDP. States are the free cells in
 * row-major order. Each of the four moves either advances to the adjacent
 * free cell or, when it points at a wall or the border, leaves the state
 * unchanged; both cost step_reward. Entering the goal additionally pays
 * goal_reward, and the goal state is terminal.
 */
inline CompiledMaze maze_to_mdp(const Maze& maze, double step_reward = -0.001,
                                double goal_reward = 1.0) {
    std::vector<StateId> cell_to_state(static_cast<std::size_t>(maze.width) * maze.height, -1);
    std::vector<Cell> state_to_cell;
    for (int r = 0; r < maze.height; ++r)
        for (int c = 0; c < maze.width; ++c)
            if (!maze.is_wall(r, c)) {
                cell_to_state[static_cast<std::size_t>(r) * maze.width + c] =
                    static_cast<StateId>(state_to_cell.size());
                state_to_cell.push_back({r, c});
            }

    if (cell_to_state[static_cast<std::size_t>(maze.start.row) * maze.width + maze.start.col] < 0 ||
        cell_to_state[static_cast<std::size_t>(maze.goal.row) * maze.width + maze.goal.col] < 0)
        throw std::invalid_argument("maze_to_mdp: start/goal must be free cells");

    TabularMdp mdp(static_cast<int>(state_to_cell.size()), maze_action::count);
    const StateId goal_state =
        cell_to_state[static_cast<std::size_t>(maze.goal.row) * maze.width + maze.goal.col];
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        const Cell cell = state_to_cell[static_cast<std::size_t>(s)];
        for (ActionId a = 0; a < maze_action::count; ++a) {
            int dr = 0, dc = 0;
            detail::step_delta(a, dr, dc);
            const int nr = cell.row + dr;
            const int nc = cell.col + dc;
            StateId next = s;
            if (maze.in_bounds(nr, nc) && !maze.is_wall(nr, nc))
                next = cell_to_state[static_cast<std::size_t>(nr) * maze.width + nc];
            mdp.set_transition(s, a, next);
            double r = step_reward;
            if (next == goal_state && s != goal_state) r += goal_reward;
            mdp.set_reward(s, a, r);
        }
    }
    mdp.set_terminal(goal_state);
    mdp.validate();

    CompiledMaze out{std::move(mdp),
                     cell_to_state[static_cast<std::size_t>(maze.start.row) * maze.width +
                                   maze.start.col],
                     goal_state, std::move(cell_to_state), std::move(state_to_cell)};
    return out;
}

} // namespace brl
