#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gridsynth/grid.hpp"
#include "gridsynth/rng.hpp"
#include "gridsynth/types.hpp"

namespace gridsynth {

struct ObjectCode {
  std::string name;
  int code;
};

/// Static description of an environment.
struct EnvSpec {
  EnvTag tag = EnvTag::Maze;
  std::vector<Action> actions;
  std::vector<ObjectCode> objects;
  int height = 0;  // observation shape
  int width = 0;
  Type request;
  /// Hard cap on episode length.
  int max_steps = 0;

  bool allows(Action a) const;
};

const EnvSpec& env_spec(EnvTag tag);

struct EpisodeSeed {
  std::uint64_t layout = 0;
  std::uint64_t dynamics = 0;
  friend bool operator==(const EpisodeSeed&, const EpisodeSeed&) = default;
};

/// A running episode. Instances are single-threaded state machines.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual GridState observe() const = 0;
  /// Advances one tick; returns `done`. Throws IllegalAction for actions
  /// outside the spec's action set; stepping a finished episode is a no-op.
  virtual bool step(Action a) = 0;
  virtual bool done() const = 0;
  /// Scripted, deterministic policy.
  virtual Action oracle_action() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
  int steps_taken() const { return steps_; }

 protected:
  int steps_ = 0;
};

std::unique_ptr<Environment> make_environment(EnvTag tag, EpisodeSeed seed);

// ---------------------------------------------------------------------------
// Maze

inline constexpr int kMazeEmpty = 1;
inline constexpr int kMazeWall = 2;
inline constexpr int kMazeGoal = 3;
inline constexpr int kMazeView = 5;
/// Rooms per side of the generated maze (grid side is 2 * rooms + 1).
inline constexpr int kMazeRooms = 6;

/// Full maze map; cells outside the map read as walls.
struct MazeWorld {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;

  int at(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return kMazeWall;
    return cells[static_cast<std::size_t>(y * width + x)];
  }
  void set(int x, int y, int code) {
    cells[static_cast<std::size_t>(y * width + x)] = static_cast<std::uint8_t>(code);
  }
};

/// Carves a perfect maze of rooms x rooms cells with a randomized depth-first
/// spanning tree.
MazeWorld generate_maze(int rooms, Rng& rng);

/// True iff the open cells form a single tree under 4-adjacency (checked
/// with union-find: every adjacency joins two previously separate sets).
bool is_perfect_maze(const MazeWorld& world);

/// Unit step for a heading: 0 east, 1 south, 2 west, 3 north.
std::pair<int, int> heading_delta(int direction);

class MazeEnv final : public Environment {
 public:
  MazeEnv(MazeWorld world, int x, int y, int direction);
  static std::unique_ptr<MazeEnv> generate(EpisodeSeed seed);

  const EnvSpec& spec() const override;
  /// The 5x5 view aligned with the agent: the agent sits at view (0, 2)
  /// looking along +x; view row r is lateral offset r - 2, positive to the
  /// agent's right.
  GridState observe() const override;
  bool step(Action a) override;
  bool done() const override { return done_; }
  Action oracle_action() const override;
  std::unique_ptr<Environment> clone() const override;

  const MazeWorld& world() const { return world_; }
  int x() const { return x_; }
  int y() const { return y_; }
  int direction() const { return dir_; }

 private:
  int relative(int forward, int lateral) const;

  MazeWorld world_;
  int x_;
  int y_;
  int dir_;
  bool last_was_right_ = false;
  bool done_ = false;
};

// ---------------------------------------------------------------------------
// MinAtar-style games on a 10x10 board

inline constexpr int kBoardSize = 10;

struct AsterixEntity {
  int x;
  int y;
  int dx;  // +1 moving right, -1 moving left
  bool gold;
};

class AsterixEnv final : public Environment {
 public:
  static constexpr int kSpawnInterval = 3;
  static constexpr int kMoveInterval = 2;

  explicit AsterixEnv(EpisodeSeed seed);

  const EnvSpec& spec() const override;
  GridState observe() const override;
  bool step(Action a) override;
  bool done() const override { return done_; }
  Action oracle_action() const override;
  std::unique_ptr<Environment> clone() const override;

  int player_x() const { return px_; }
  int player_y() const { return py_; }
  const std::vector<AsterixEntity>& entities() const { return entities_; }

 private:
  void spawn();
  void collide();

  Rng rng_;
  int px_ = 5;
  int py_ = 5;
  int tick_ = 0;
  std::vector<AsterixEntity> entities_;
  bool done_ = false;
};

class SpaceInvadersEnv final : public Environment {
 public:
  static constexpr int kAlienMoveInterval = 6;
  static constexpr int kEnemyShotInterval = 10;
  static constexpr int kFireCooldown = 5;
  /// Initial alien block: rows [0, 4), columns [2, 8).
  static constexpr int kAlienRows = 4;
  static constexpr int kAlienColBegin = 2;
  static constexpr int kAlienColEnd = 8;

  explicit SpaceInvadersEnv(EpisodeSeed seed);

  const EnvSpec& spec() const override;
  GridState observe() const override;
  bool step(Action a) override;
  bool done() const override { return done_; }
  Action oracle_action() const override;
  std::unique_ptr<Environment> clone() const override;

  int cannon_x() const { return cannon_; }

 private:
  void reset_aliens();
  void resolve_hits();
  bool alien(int x, int y) const { return aliens_[y * kBoardSize + x] != 0; }

  Rng rng_;
  int cannon_ = 5;
  int tick_ = 0;
  int cooldown_ = 0;
  int alien_dx_ = -1;
  std::vector<std::uint8_t> aliens_;
  std::vector<std::pair<int, int>> friendly_;  // (x, y)
  std::vector<std::pair<int, int>> enemy_;
  bool done_ = false;
};

}  // namespace gridsynth
