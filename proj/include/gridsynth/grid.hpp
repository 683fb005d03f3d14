#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsynth {

enum class EnvTag : std::uint8_t { Maze, Asterix, SpaceInvaders };

std::string_view env_name(EnvTag env);
/// Throws FormatError for unknown names.
EnvTag env_from_name(std::string_view name);

enum class Action : std::uint8_t { Left, Right, Forward, Up, Down, Fire, NoOp };
inline constexpr int kNumActions = 7;

std::string_view action_name(Action a);
std::optional<Action> action_from_name(std::string_view name);

/// One observation: a row-major grid of small object codes plus the agent's
/// heading (maze only; 0 east, 1 south, 2 west, 3 north).
struct GridState {
  EnvTag env = EnvTag::Maze;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;
  std::optional<int> direction;

  GridState() = default;
  GridState(EnvTag e, int h, int w, std::uint8_t fill = 0)
      : env(e), height(h), width(w), cells(static_cast<std::size_t>(h * w), fill) {}

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  int at(int x, int y) const { return cells[static_cast<std::size_t>(y * width + x)]; }
  void set(int x, int y, int code) {
    cells[static_cast<std::size_t>(y * width + x)] = static_cast<std::uint8_t>(code);
  }

  friend bool operator==(const GridState&, const GridState&) = default;
};

}  // namespace gridsynth
