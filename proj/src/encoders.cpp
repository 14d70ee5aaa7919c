#include "polsyn/encoders.hpp"

namespace polsyn {

nn::Tensor encode_pacman(const Maze& maze, const PacmanState& s) {
  const auto& g = maze.shape();
  const std::size_t h = static_cast<std::size_t>(g.height()), w = static_cast<std::size_t>(g.width());
  nn::Tensor t({kPacChannels, h, w});
  auto put = [&](std::size_t ch, Cell c) { t.at(ch, static_cast<std::size_t>(g.y(c)), static_cast<std::size_t>(g.x(c))) = 1.0f; };
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Cell cell = static_cast<Cell>(c);
    if (maze.wall(cell)) put(kPacWalls, cell);
    if (s.has_food(cell)) put(kPacFood, cell);
  }
  put(kPacPacman, s.pacman);
  for (const auto& ghost : s.ghosts) {
    const std::size_t d = ghost.heading == kNoHeading ? 0 : ghost.heading;
    put(kPacGhostNorth + d, ghost.cell);
  }
  return t;
}

nn::Tensor encode_frozen_lake(const FrozenLakeLayout& layout, Cell robot) {
  const auto& g = layout.shape;
  const std::size_t h = static_cast<std::size_t>(g.height()), w = static_cast<std::size_t>(g.width());
  nn::Tensor t({kLakeChannels, h, w});
  auto put = [&](std::size_t ch, Cell c) { t.at(ch, static_cast<std::size_t>(g.y(c)), static_cast<std::size_t>(g.x(c))) = 1.0f; };
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Cell cell = static_cast<Cell>(c);
    switch (layout.at(cell)) {
      case LakeCell::wall: put(kLakeWalls, cell); break;
      case LakeCell::hole: put(kLakeHoles, cell); break;
      case LakeCell::target: put(kLakeTarget, cell); break;
      case LakeCell::empty: break;
    }
  }
  put(kLakeRobot, robot);
  return t;
}

Encoder<PacmanState> pacman_encoder(const Pacman& game) {
  const auto& g = game.maze().shape();
  return {"pacman",
          {kPacChannels, static_cast<std::size_t>(g.height()), static_cast<std::size_t>(g.width())},
          [&game](const PacmanState& s) { return encode_pacman(game.maze(), s); }};
}

Encoder<LakeState> frozen_lake_encoder(const FrozenLake& lake) {
  const auto& g = lake.layout(0).shape;
  for (std::size_t i = 1; i < lake.num_layouts(); ++i)
    if (!(lake.layout(i).shape == g)) throw std::invalid_argument("frozen lake encoder: layouts differ in size");
  return {"frozen-lake",
          {kLakeChannels, static_cast<std::size_t>(g.height()), static_cast<std::size_t>(g.width())},
          [&lake](const LakeState& s) { return encode_frozen_lake(lake.layout(s.layout), s.cell); }};
}

}  // namespace polsyn
