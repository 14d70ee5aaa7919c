#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "polsyn/action.hpp"

namespace polsyn {

/// Cardinal moves; the numeric value is the action index in both grid games.
enum class Direction : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

inline constexpr std::array<Direction, 4> kDirections = {Direction::north, Direction::east, Direction::south,
                                                         Direction::west};

constexpr Direction reverse(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 2) % 4); }
constexpr Action to_action(Direction d) { return static_cast<Action>(d); }
constexpr Direction to_direction(Action a) { return static_cast<Direction>(a & 3u); }

std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view name);

using Cell = std::uint16_t;

/// Row-major rectangular grid geometry. Row 0 is the top row; north is row - 1.
class GridShape {
 public:
  GridShape() = default;
  GridShape(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  Cell cell(int x, int y) const { return static_cast<Cell>(y * width_ + x); }
  int x(Cell c) const { return c % width_; }
  int y(Cell c) const { return c / width_; }
  bool on_border(Cell c) const {
    return x(c) == 0 || y(c) == 0 || x(c) == width_ - 1 || y(c) == height_ - 1;
  }
  /// Neighbor in direction d, or nullopt outside the grid.
  std::optional<Cell> neighbor(Cell c, Direction d) const;

  bool operator==(const GridShape&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
};

}  // namespace polsyn
