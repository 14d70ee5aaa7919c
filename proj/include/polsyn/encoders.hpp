#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polsyn/frozen_lake.hpp"
#include "polsyn/nn.hpp"
#include "polsyn/pacman.hpp"

namespace polsyn {

/// Pac-Man planes (layout height x width).
enum PacmanChannel : std::size_t {
  kPacWalls = 0,
  kPacFood = 1,
  kPacPacman = 2,
  kPacGhostNorth = 3,  // heading value d lands in channel 3 + d
  kPacChannels = 7,
};

/// Frozen Lake planes.
enum LakeChannel : std::size_t { kLakeWalls = 0, kLakeHoles = 1, kLakeTarget = 2, kLakeRobot = 3, kLakeChannels = 4 };

/// 7 one-hot planes: walls, food, Pac-Man, then ghosts by last move
/// (N, E, S, W). A ghost that has not moved yet counts as moving north.
nn::Tensor encode_pacman(const Maze& maze, const PacmanState& s);

/// 4 one-hot planes: walls, holes, target, robot.
nn::Tensor encode_frozen_lake(const FrozenLakeLayout& layout, Cell robot);

/// State-to-tensor map tagged with its environment.
template <class S>
struct Encoder {
  std::string env;
  std::vector<std::size_t> shape;
  std::function<nn::Tensor(const S&)> fn;

  nn::Tensor operator()(const S& s) const { return fn(s); }
};

Encoder<PacmanState> pacman_encoder(const Pacman& game);
Encoder<LakeState> frozen_lake_encoder(const FrozenLake& lake);

}  // namespace polsyn
