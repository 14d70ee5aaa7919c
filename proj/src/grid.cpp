#include "polsyn/grid.hpp"

#include <stdexcept>

namespace polsyn {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::north: return "north";
    case Direction::east: return "east";
    case Direction::south: return "south";
    case Direction::west: return "west";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view name) {
  for (Direction d : kDirections)
    if (direction_name(d) == name) return d;
  return std::nullopt;
}

GridShape::GridShape(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0 || static_cast<long>(width) * height > 65535)
    throw std::invalid_argument("grid dimensions out of range");
}

std::optional<Cell> GridShape::neighbor(Cell c, Direction d) const {
  int cx = x(c), cy = y(c);
  switch (d) {
    case Direction::north: --cy; break;
    case Direction::east: ++cx; break;
    case Direction::south: ++cy; break;
    case Direction::west: --cx; break;
  }
  if (cx < 0 || cy < 0 || cx >= width_ || cy >= height_) return std::nullopt;
  return cell(cx, cy);
}

}  // namespace polsyn
