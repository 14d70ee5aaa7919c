#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polsyn/grid.hpp"
#include "polsyn/model.hpp"

namespace polsyn {

enum class LakeCell : std::uint8_t { empty, wall, hole, target };

/// A Frozen Lake board. Border cells are walls, there is exactly one target,
/// and the start cell is empty.
struct FrozenLakeLayout {
  GridShape shape;
  std::vector<LakeCell> cells;
  Cell start = 0;

  LakeCell at(Cell c) const { return cells[c]; }
  void validate() const;
  bool operator==(const FrozenLakeLayout&) const = default;

  /// Layout file: {"width", "height", "cells": [row strings]} with
  /// '#' wall, '.' empty, 'O' hole, 'T' target, 'S' start.
  static FrozenLakeLayout parse(const std::string& json_text);
  std::string dump() const;
  static FrozenLakeLayout load(const std::string& path);
  void save(const std::string& path) const;
};

struct FrozenLakeGenOptions {
  double wall_probability = 0.1;
  double hole_probability = 0.1;
  int max_attempts = 100;
};

/// Random layout: border walls, interior walls and then holes in the
/// remaining cells independently, then target and start in two distinct
/// remaining empty cells. Retries while fewer than two empty cells remain.
FrozenLakeLayout gen_frozen_lake(int width, int height, Rng& rng, const FrozenLakeGenOptions& opts = {});

struct LakeState {
  std::uint16_t layout = 0;
  Cell cell = 0;
  bool operator==(const LakeState&) const = default;
};

/**
 * Frozen Lake over one or more layouts (the state names its layout).
 *
 * Moving in a direction is legal when the neighbor in that direction is not a
 * wall. The intended direction gets weight 10 and every other non-wall,
 * non-reverse direction weight 1. Holes, the target, and cells without any
 * legal move are absorbing; all four actions self-loop there. The only reward
 * is the terminal reward 1 on the target.
 */
class FrozenLake {
 public:
  using State = LakeState;

  explicit FrozenLake(FrozenLakeLayout layout);
  explicit FrozenLake(std::vector<FrozenLakeLayout> layouts);

  std::size_t num_layouts() const { return layouts_.size(); }
  const FrozenLakeLayout& layout(std::size_t i = 0) const { return layouts_.at(i); }
  State initial_state(std::size_t layout = 0) const;

  std::size_t num_actions() const { return 4; }
  ActionSet actions(const State& s) const;
  std::vector<Transition<State>> successors(const State& s, Action a) const;
  std::pair<State, double> sample(const State& s, Action a, Rng& rng) const;
  double terminal_reward(const State& s) const;
  bool is_absorbing(const State& s) const;
  Range return_bounds(std::size_t) const { return {0.0, 1.0}; }
  const std::vector<std::string>& label_names() const;
  std::uint64_t label_mask(const State& s) const;
  Outcome outcome(const State& s) const;

  /// Cells a robot can stand on outside of sinks: empty cells (start included).
  std::vector<State> free_states(std::size_t layout) const;
  /// Every non-wall cell of the layout.
  std::vector<State> non_wall_states(std::size_t layout) const;

 private:
  struct Move {
    std::array<Cell, 3> next{};
    std::array<double, 3> prob{};
    std::uint8_t count = 0;
  };
  struct Table {
    std::vector<ActionSet> legal;
    std::vector<bool> absorbing;
    std::vector<Move> moves;  // cell * 4 + action
  };

  void build_tables();

  std::vector<FrozenLakeLayout> layouts_;
  std::vector<Table> tables_;
};

}  // namespace polsyn

template <>
struct std::hash<polsyn::LakeState> {
  std::size_t operator()(const polsyn::LakeState& s) const noexcept {
    return (static_cast<std::size_t>(s.layout) << 16) | s.cell;
  }
};
