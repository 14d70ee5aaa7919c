#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "polsyn/grid.hpp"
#include "polsyn/model.hpp"

namespace polsyn {

/// Heading of a ghost that has not moved yet.
inline constexpr std::uint8_t kNoHeading = 4;

struct GhostState {
  Cell cell = 0;
  std::uint8_t heading = kNoHeading;  // a Direction value, or kNoHeading
  bool operator==(const GhostState&) const = default;
};

/// Static walls plus the initial placement of food and agents.
struct PacmanLayout {
  GridShape shape;
  std::vector<bool> walls;
  std::vector<bool> food;
  Cell pacman = 0;
  std::vector<Cell> ghosts;

  void validate() const;
  bool operator==(const PacmanLayout&) const = default;

  /// Layout file: {"width", "height", "cells": [row strings]} with
  /// '#' wall, '.' food, ' ' empty, 'P' Pac-Man, 'G' ghost.
  static PacmanLayout parse(const std::string& json_text);
  std::string dump() const;
  static PacmanLayout load(const std::string& path);
  void save(const std::string& path) const;
};

/// Wall geometry and move legality shared by the game and its safety abstraction.
class Maze {
 public:
  Maze() = default;
  Maze(GridShape shape, std::vector<bool> walls);

  const GridShape& shape() const { return shape_; }
  bool wall(Cell c) const { return walls_[c]; }
  ActionSet legal(Cell c) const { return legal_[c]; }
  /// Destination of a legal move.
  Cell step(Cell c, Direction d) const { return *shape_.neighbor(c, d); }

  /// Ghost moves: uniform over legal directions other than the reverse of the
  /// heading, or the reverse alone when it is the only legal move.
  std::vector<GhostState> ghost_moves(const GhostState& g) const;

 private:
  GridShape shape_;
  std::vector<bool> walls_;
  std::vector<ActionSet> legal_;
};

enum class GameStatus : std::uint8_t { playing, won, lost };

struct PacmanState {
  Cell pacman = 0;
  std::vector<GhostState> ghosts;
  std::vector<std::uint64_t> food;  // bitset over cells
  std::uint16_t step = 0;
  GameStatus status = GameStatus::playing;

  bool has_food(Cell c) const { return (food[c / 64] >> (c % 64)) & 1u; }
  void clear_food(Cell c) { food[c / 64] &= ~(1ULL << (c % 64)); }
  void set_food(Cell c) { food[c / 64] |= 1ULL << (c % 64); }
  std::size_t food_count() const;
  bool operator==(const PacmanState&) const = default;
};

/// Pac-Man state with food ignored: what matters for staying safe.
struct SafetyState {
  Cell pacman = 0;
  std::vector<GhostState> ghosts;
  bool lost = false;
  bool operator==(const SafetyState&) const = default;
};

struct PacmanRewards {
  double step = -1.0;
  double food = 10.0;
  double win = 500.0;
  double loss = -500.0;
};

/**
 * Pac-Man as an MDP. One transition moves Pac-Man and every ghost
 * simultaneously; ghosts move independently and uniformly (see Maze).
 * Contact (same cell, or Pac-Man and a ghost swapping cells) is a loss and
 * takes precedence over eating. Otherwise food on Pac-Man's new cell is
 * eaten and clearing the board is a win. Rewards are attached to the
 * transition outcome: step + food*eaten + win/loss bonus. Won and lost states
 * are absorbing; terminal rewards are zero.
 */
class Pacman {
 public:
  using State = PacmanState;

  explicit Pacman(PacmanLayout layout, PacmanRewards rewards = {});

  const PacmanLayout& layout() const { return layout_; }
  const Maze& maze() const { return maze_; }
  State initial_state() const;
  /// State with Pac-Man, ghosts and food taken from a layout over the same walls.
  State state_from_layout(const PacmanLayout& placement) const;

  std::size_t num_actions() const { return 4; }
  ActionSet actions(const State& s) const { return maze_.legal(s.pacman); }
  std::vector<Transition<State>> successors(const State& s, Action a) const;
  std::pair<State, double> sample(const State& s, Action a, Rng& rng) const;
  double terminal_reward(const State&) const { return 0.0; }
  bool is_absorbing(const State& s) const { return s.status != GameStatus::playing; }
  Range return_bounds(std::size_t h) const;
  const std::vector<std::string>& label_names() const;
  std::uint64_t label_mask(const State& s) const;
  Outcome outcome(const State& s) const;

  /// Uniformly random placement: Pac-Man and ghosts on distinct free cells,
  /// random legal headings, each free cell holding food with probability
  /// `food_probability` (at least one pill).
  State random_state(Rng& rng, double food_probability = 0.3) const;

  nlohmann::json state_to_json(const State& s) const;
  State state_from_json(const nlohmann::json& j) const;
  /// Canonical byte encoding, used as a deduplication key.
  std::string state_key(const State& s) const;

 private:
  State apply(const State& s, Cell pac_next, const std::vector<GhostState>& ghosts_next, double& reward) const;

  PacmanLayout layout_;
  Maze maze_;
  PacmanRewards rewards_;
  std::size_t total_food_ = 0;
};

/// The food-free safety model: absorbing "loss" states, every other state safe.
/// Terminal reward 1 on safe states, 0 on lost ones, no step rewards.
class PacmanSafety {
 public:
  using State = SafetyState;

  explicit PacmanSafety(Maze maze) : maze_(std::move(maze)) {}

  static State project(const PacmanState& s);

  const Maze& maze() const { return maze_; }
  std::size_t num_actions() const { return 4; }
  ActionSet actions(const State& s) const { return maze_.legal(s.pacman); }
  std::vector<Transition<State>> successors(const State& s, Action a) const;
  double terminal_reward(const State& s) const { return s.lost ? 0.0 : 1.0; }
  bool is_absorbing(const State& s) const { return s.lost; }
  Range return_bounds(std::size_t) const { return {0.0, 1.0}; }
  const std::vector<std::string>& label_names() const;
  std::uint64_t label_mask(const State& s) const { return s.lost ? 1u : 0u; }
  Outcome outcome(const State& s) const { return s.lost ? Outcome::loss : Outcome::none; }

 private:
  Maze maze_;
};

/// Visits every joint ghost move; `fn(next_ghosts, probability)`.
template <class Fn>
void for_each_ghost_move(const Maze& maze, const std::vector<GhostState>& ghosts, Fn&& fn) {
  std::vector<std::vector<GhostState>> options;
  options.reserve(ghosts.size());
  for (const auto& g : ghosts) options.push_back(maze.ghost_moves(g));
  std::vector<std::size_t> idx(ghosts.size(), 0);
  std::vector<GhostState> next(ghosts.size());
  while (true) {
    double p = 1.0;
    for (std::size_t i = 0; i < ghosts.size(); ++i) {
      next[i] = options[i][idx[i]];
      p /= static_cast<double>(options[i].size());
    }
    fn(next, p);
    std::size_t i = 0;
    for (; i < ghosts.size(); ++i) {
      if (++idx[i] < options[i].size()) break;
      idx[i] = 0;
    }
    if (i == ghosts.size()) break;
  }
}

/// True when Pac-Man moving pac->pac_next meets ghost g->g_next.
inline bool contact(Cell pac, Cell pac_next, Cell g, Cell g_next) {
  return pac_next == g_next || (pac_next == g && g_next == pac);
}

}  // namespace polsyn

template <>
struct std::hash<polsyn::PacmanState> {
  std::size_t operator()(const polsyn::PacmanState& s) const noexcept;
};

template <>
struct std::hash<polsyn::SafetyState> {
  std::size_t operator()(const polsyn::SafetyState& s) const noexcept;
};
