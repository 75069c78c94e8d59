// Copyright 2026 The smodice-tabular Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smodice/error.hpp"
#include "smodice/mdp.hpp"

namespace smodice {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct WeightedCell {
  Cell cell;
  double weight = 1.0;
};

enum class MoveSet { Cardinal4, Diagonal8 };

struct Move {
  int drow;
  int dcol;
};

/// Action order: Cardinal4 is up, right, down, left; Diagonal8 goes clockwise from up.
inline std::vector<Move> moves(MoveSet set) {
  if (set == MoveSet::Cardinal4) return {{-1, 0}, {0, 1}, {1, 0}, {0, -1}};
  return {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}};
}

inline std::string_view to_string(MoveSet set) {
  return set == MoveSet::Cardinal4 ? "cardinal4" : "diagonal8";
}

inline MoveSet parse_move_set(std::string_view name) {
  if (name == "cardinal4") return MoveSet::Cardinal4;
  if (name == "diagonal8") return MoveSet::Diagonal8;
  throw ValidationError("unknown move set '" + std::string(name) + "'");
}

/// Gridworld description. States are the non-wall cells in row-major order.
struct GridSpec {
  int width = 7;
  int height = 7;
  std::vector<Cell> walls;
  std::vector<WeightedCell> start_cells{{{0, 0}, 1.0}};
  MoveSet move_set = MoveSet::Cardinal4;
  double slip_prob = 0.0;
  std::optional<Cell> goal = Cell{6, 6};

  int num_actions() const { return static_cast<int>(moves(move_set).size()); }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
  }

  bool is_wall(Cell c) const {
    for (const auto& w : walls)
      if (w == c) return true;
    return false;
  }

  bool open(Cell c) const { return in_bounds(c) && !is_wall(c); }

  void validate() const {
    if (width < 1 || height < 1) throw ValidationError("grid dimensions must be positive");
    if (!(slip_prob >= 0.0 && slip_prob < 1.0))
      throw ValidationError("slip_prob must lie in [0, 1)");
    for (const auto& w : walls)
      if (!in_bounds(w)) throw ValidationError("wall outside the grid");
    if (start_cells.empty()) throw ValidationError("grid needs at least one start cell");
    double total = 0.0;
    for (const auto& sc : start_cells) {
      if (!open(sc.cell)) throw ValidationError("start cell is a wall or out of bounds");
      if (!(sc.weight >= 0.0)) throw ValidationError("start weights must be nonnegative");
      total += sc.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("start weights must sum to 1");
    if (goal && !open(*goal)) throw ValidationError("goal is a wall or out of bounds");
  }

  /// Row-major index of each open cell, -1 for walls.
  std::vector<int> state_index() const {
    std::vector<int> index(static_cast<std::size_t>(width * height), -1);
    int next = 0;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        if (!is_wall({r, c})) index[static_cast<std::size_t>(r * width + c)] = next++;
    return index;
  }

  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        if (!is_wall({r, c})) out.push_back({r, c});
    return out;
  }

  int num_states() const { return static_cast<int>(cells().size()); }

  int state_of(Cell c) const {
    if (!open(c)) throw ValidationError("cell is not an open grid cell");
    return state_index()[static_cast<std::size_t>(c.row * width + c.col)];
  }
};

/// Same cells, different action capabilities.
inline GridSpec with_move_set(GridSpec spec, MoveSet set) {
  spec.move_set = set;
  return spec;
}

/// Named presets for the mismatched-expert ("figure2a") and example-based ("figure2b") tasks.
inline GridSpec preset(std::string_view name) {
  GridSpec spec;
  if (name == "figure2a") {
    spec.width = 3;
    spec.height = 3;
    spec.goal = Cell{2, 2};
  } else if (name == "figure2b") {
    spec.width = 6;
    spec.height = 5;
    spec.goal = Cell{4, 5};
  } else {
    throw ValidationError("unknown grid preset '" + std::string(name) + "'");
  }
  return spec;
}

namespace detail {

// Successor state of each (state, action) under deterministic motion; blocked moves stay.
inline std::vector<std::vector<int>> successors(const GridSpec& spec) {
  const auto cells = spec.cells();
  const auto index = spec.state_index();
  const auto mv = moves(spec.move_set);
  std::vector<std::vector<int>> out(cells.size(), std::vector<int>(mv.size()));
  for (std::size_t s = 0; s < cells.size(); ++s) {
    for (std::size_t a = 0; a < mv.size(); ++a) {
      const Cell to{cells[s].row + mv[a].drow, cells[s].col + mv[a].dcol};
      out[s][a] = spec.open(to) ? index[static_cast<std::size_t>(to.row * spec.width + to.col)]
                                : static_cast<int>(s);
    }
  }
  return out;
}

// BFS hop distance to the goal along reversed edges; -1 where unreachable.
inline std::vector<int> distance_to_goal(const GridSpec& spec) {
  const auto next = successors(spec);
  const int goal = spec.state_of(*spec.goal);
  std::vector<int> dist(next.size(), -1);
  dist[static_cast<std::size_t>(goal)] = 0;
  std::deque<int> queue{goal};
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    for (std::size_t s = 0; s < next.size(); ++s) {
      if (dist[s] >= 0) continue;
      for (int to : next[s]) {
        if (to == t) {
          dist[s] = dist[static_cast<std::size_t>(t)] + 1;
          queue.push_back(static_cast<int>(s));
          break;
        }
      }
    }
  }
  return dist;
}

}  // namespace detail

/// States reachable from any start cell (goal treated as absorbing).
inline std::vector<int> reachable_states(const GridSpec& spec) {
  spec.validate();
  const auto next = detail::successors(spec);
  const int goal = spec.goal ? spec.state_of(*spec.goal) : -1;
  std::vector<char> seen(next.size(), 0);
  std::deque<int> queue;
  for (const auto& sc : spec.start_cells) {
    const int s = spec.state_of(sc.cell);
    if (sc.weight > 0.0 && !seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = 1;
      queue.push_back(s);
    }
  }
  std::vector<int> out;
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    out.push_back(s);
    if (s == goal) continue;
    for (int to : next[static_cast<std::size_t>(s)]) {
      if (!seen[static_cast<std::size_t>(to)]) {
        seen[static_cast<std::size_t>(to)] = 1;
        queue.push_back(to);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/**
 * Materializes the grid as a TabularMdp.
 *
 * Blocked moves self-loop; the goal is absorbing under every action. With
 * slip, probability slip_prob is spread uniformly over the other actions whose
 * moves are not blocked (no slip when there are none).
 */
inline TabularMdp build_mdp(const GridSpec& spec, double gamma,
                            const WarningSink& warnings = stderr_warnings()) {
  spec.validate();
  const auto next = detail::successors(spec);
  const int ns = static_cast<int>(next.size());
  const int na = spec.num_actions();
  const int goal = spec.goal ? spec.state_of(*spec.goal) : -1;
  Matrix transition = Matrix::Zero(Eigen::Index(ns) * na, ns);
  for (int s = 0; s < ns; ++s) {
    const auto& to = next[static_cast<std::size_t>(s)];
    for (int a = 0; a < na; ++a) {
      auto row = transition.row(Eigen::Index(s) * na + a);
      if (s == goal) {
        row(s) = 1.0;
        continue;
      }
      std::vector<int> others;
      for (int b = 0; b < na; ++b)
        if (b != a && to[static_cast<std::size_t>(b)] != s) others.push_back(b);
      if (spec.slip_prob > 0.0 && !others.empty()) {
        row(to[static_cast<std::size_t>(a)]) += 1.0 - spec.slip_prob;
        for (int b : others)
          row(to[static_cast<std::size_t>(b)]) += spec.slip_prob / static_cast<double>(others.size());
      } else {
        row(to[static_cast<std::size_t>(a)]) = 1.0;
      }
    }
  }
  Vector mu0 = Vector::Zero(ns);
  for (const auto& sc : spec.start_cells) mu0[spec.state_of(sc.cell)] += sc.weight;
  if (goal >= 0) {
    const auto reach = reachable_states(spec);
    if (std::find(reach.begin(), reach.end(), goal) == reach.end())
      warn(warnings, "goal is not reachable from any start cell");
  }
  return TabularMdp(ns, na, std::move(transition), std::move(mu0), gamma);
}

/**
 * Deterministic shortest-path policy toward the goal for the grid's move set.
 * Ties go to the lowest action index; the goal and unreachable states use action 0.
 */
inline TabularPolicy shortest_path_policy(const GridSpec& spec) {
  spec.validate();
  if (!spec.goal) throw ValidationError("shortest-path policy needs a goal");
  const auto next = detail::successors(spec);
  const auto dist = detail::distance_to_goal(spec);
  std::vector<int> actions(next.size(), 0);
  for (std::size_t s = 0; s < next.size(); ++s) {
    if (dist[s] <= 0) continue;
    for (std::size_t a = 0; a < next[s].size(); ++a) {
      if (dist[static_cast<std::size_t>(next[s][a])] == dist[s] - 1) {
        actions[s] = static_cast<int>(a);
        break;
      }
    }
  }
  return TabularPolicy::deterministic(actions, spec.num_actions());
}

/// Chebyshev-geodesic expert for 8-connected grids.
inline TabularPolicy diagonal_expert_policy(const GridSpec& spec) {
  if (spec.move_set != MoveSet::Diagonal8)
    throw ValidationError("diagonal expert needs the diagonal8 move set");
  return shortest_path_policy(spec);
}

inline TabularPolicy random_behavior_policy(const GridSpec& spec) {
  spec.validate();
  return TabularPolicy::uniform(spec.num_states(), spec.num_actions());
}

}  // namespace smodice
