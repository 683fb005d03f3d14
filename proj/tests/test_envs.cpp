#include <gtest/gtest.h>

#include <queue>
#include <set>

#include "gridsynth/errors.hpp"
#include "test_util.hpp"

using namespace gridsynth;
using namespace testutil;

namespace {

/// All-wall world with the listed open cells.
MazeWorld carve(int w, int h, std::initializer_list<std::pair<int, int>> open) {
  MazeWorld m;
  m.width = w;
  m.height = h;
  m.cells.assign(static_cast<std::size_t>(w * h), kMazeWall);
  for (auto [x, y] : open) m.set(x, y, kMazeEmpty);
  return m;
}

/// Connectivity by BFS plus the tree edge count, independent of the
/// union-find check in the library.
bool spanning_tree(const MazeWorld& m) {
  int open = 0;
  int edges = 0;
  std::pair<int, int> first{-1, -1};
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(x, y) == kMazeWall) continue;
      ++open;
      if (first.first < 0) first = {x, y};
      edges += m.at(x + 1, y) != kMazeWall;
      edges += m.at(x, y + 1) != kMazeWall;
    }
  }
  std::set<std::pair<int, int>> seen{first};
  std::queue<std::pair<int, int>> q;
  q.push(first);
  while (!q.empty()) {
    auto [x, y] = q.front();
    q.pop();
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      if (m.at(x + dx, y + dy) != kMazeWall && seen.insert({x + dx, y + dy}).second) q.push({x + dx, y + dy});
    }
  }
  return static_cast<int>(seen.size()) == open && edges == open - 1;
}

std::vector<GridState> rollout(EnvTag tag, EpisodeSeed seed, int steps) {
  auto env = make_environment(tag, seed);
  std::vector<GridState> out{env->observe()};
  for (int i = 0; i < steps && !env->done(); ++i) {
    env->step(env->oracle_action());
    out.push_back(env->observe());
  }
  return out;
}

int count_code(const GridState& s, int code) {
  int n = 0;
  for (auto c : s.cells) n += c == code;
  return n;
}

}  // namespace

TEST(Maze, GeneratedMazesArePerfect) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const MazeWorld m = generate_maze(kMazeRooms, rng);
    EXPECT_EQ(m.width, 2 * kMazeRooms + 1);
    EXPECT_TRUE(is_perfect_maze(m));
    EXPECT_TRUE(spanning_tree(m));
  }
  MazeWorld loop = carve(5, 5, {{1, 1}, {2, 1}, {3, 1}, {1, 2}, {3, 2}, {1, 3}, {2, 3}, {3, 3}});
  EXPECT_FALSE(is_perfect_maze(loop));
  EXPECT_FALSE(spanning_tree(loop));
}

TEST(Maze, ObservationIsAlignedFiveByFive) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto env = MazeEnv::generate({seed, seed});
    const GridState s = env->observe();
    EXPECT_EQ(s.height, 5);
    EXPECT_EQ(s.width, 5);
    ASSERT_TRUE(s.direction.has_value());
    EXPECT_EQ(*s.direction, env->direction());
    EXPECT_NE(s.at(0, 2), kMazeWall);  // the agent's own cell
    for (auto c : s.cells) EXPECT_TRUE(c == kMazeEmpty || c == kMazeWall || c == kMazeGoal);
  }
}

TEST(Maze, ViewRowsAreLateralOffsets) {
  // corridor along +x with one side opening to the south of (2,1)
  MazeEnv env(carve(7, 5, {{1, 1}, {2, 1}, {3, 1}, {4, 1}, {2, 2}}), 1, 1, 0);
  GridState s = env.observe();
  EXPECT_EQ(s.at(1, 2), kMazeEmpty);  // one ahead
  EXPECT_EQ(s.at(1, 3), kMazeEmpty);  // one ahead, one to the right (south)
  EXPECT_EQ(s.at(1, 1), kMazeWall);   // one ahead, one to the left (north)
}

TEST(Maze, ForwardIntoWallAndTurns) {
  MazeEnv env(carve(5, 5, {{1, 1}, {1, 2}, {1, 3}}), 1, 1, 0);
  const GridState before = env.observe();
  env.step(Action::Forward);
  EXPECT_EQ(env.x(), 1);
  EXPECT_EQ(env.y(), 1);
  EXPECT_EQ(env.observe(), before);
  env.step(Action::Left);
  EXPECT_EQ(env.direction(), 3);
  EXPECT_EQ(env.x(), 1);
  EXPECT_EQ(env.y(), 1);
  env.step(Action::Right);
  env.step(Action::Right);
  EXPECT_EQ(env.direction(), 1);
  env.step(Action::Forward);
  EXPECT_EQ(env.y(), 2);
}

TEST(Maze, OracleTurnsRightWhenBlockedAhead) {
  MazeEnv env(carve(5, 5, {{1, 1}, {1, 2}, {1, 3}}), 1, 1, 0);
  EXPECT_EQ(env.oracle_action(), Action::Right);
  MazeEnv dead_end(carve(5, 5, {{1, 1}}), 1, 1, 0);
  EXPECT_EQ(dead_end.oracle_action(), Action::Left);
}

TEST(Maze, OracleSolvesEveryMaze) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto env = MazeEnv::generate({seed * 7 + 1, seed});
    const int cap = 4 * env->world().width * env->world().height;
    int steps = 0;
    bool reached = false;
    while (steps < cap) {
      env->step(env->oracle_action());
      ++steps;
      if (env->world().at(env->x(), env->y()) == kMazeGoal) {
        reached = true;
        break;
      }
    }
    EXPECT_TRUE(reached) << "seed " << seed;
    EXPECT_TRUE(env->done());
  }
}

TEST(Maze, AgentStartOnWallRejected) {
  EXPECT_THROW(MazeEnv(carve(5, 5, {{1, 1}}), 0, 0, 0), FormatError);
}

TEST(Envs, SeedsReproduceEpisodes) {
  for (EnvTag tag : {EnvTag::Maze, EnvTag::Asterix, EnvTag::SpaceInvaders}) {
    EXPECT_EQ(rollout(tag, {3, 4}, 200), rollout(tag, {3, 4}, 200));
    EXPECT_NE(rollout(tag, {3, 4}, 200), rollout(tag, {5, 6}, 200));
  }
}

TEST(Envs, IllegalActionsRejected) {
  EXPECT_THROW(make_environment(EnvTag::Maze, {1, 1})->step(Action::Fire), IllegalAction);
  EXPECT_THROW(make_environment(EnvTag::Asterix, {1, 1})->step(Action::Forward), IllegalAction);
  EXPECT_THROW(make_environment(EnvTag::SpaceInvaders, {1, 1})->step(Action::Up), IllegalAction);
}

TEST(Envs, SpecsMatchTheirTables) {
  EXPECT_EQ(env_spec(EnvTag::Maze).request, parse_type("map -> direction -> action"));
  EXPECT_EQ(env_spec(EnvTag::Asterix).request, parse_type("map -> action"));
  EXPECT_EQ(env_spec(EnvTag::Maze).actions.size(), 3u);
  EXPECT_EQ(env_spec(EnvTag::Asterix).actions.size(), 5u);
  EXPECT_EQ(env_spec(EnvTag::SpaceInvaders).actions.size(), 4u);
  const auto maze = make_prim_table(EnvTag::Maze);
  const auto si = make_prim_table(EnvTag::SpaceInvaders);
  EXPECT_NE(maze.find("direction-3"), nullptr);
  EXPECT_NE(maze.find("eq-direction?"), nullptr);
  EXPECT_EQ(si.find("direction-0"), nullptr);
  EXPECT_EQ(si.find("eq-direction?"), nullptr);
  EXPECT_NE(maze.find("5"), nullptr);
  EXPECT_EQ(maze.find("6"), nullptr);
  EXPECT_NE(si.find("9"), nullptr);
}

TEST(Asterix, InitialBoardHasOnePlayer) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    AsterixEnv env({s, s + 1});
    const GridState g = env.observe();
    EXPECT_EQ(count_code(g, 1), 1);
    EXPECT_EQ(g.at(5, 5), 1);
    EXPECT_EQ(env.player_x(), 5);
  }
}

TEST(Asterix, OracleAvoidsAdjacentEnemy) {
  // drive episodes and check the oracle never steps onto a cell holding an enemy
  for (std::uint64_t s = 0; s < 20; ++s) {
    AsterixEnv env({s, 2 * s});
    while (!env.done()) {
      const Action a = env.oracle_action();
      int nx = env.player_x();
      int ny = env.player_y();
      if (a == Action::Left) nx = std::max(0, nx - 1);
      if (a == Action::Right) nx = std::min(9, nx + 1);
      if (a == Action::Up) ny = std::max(1, ny - 1);
      if (a == Action::Down) ny = std::min(8, ny + 1);
      for (const auto& e : env.entities()) {
        if (!e.gold) {
          ASSERT_FALSE(e.x == nx && e.y == ny) << "seed " << s << " step " << env.steps_taken();
        }
      }
      env.step(a);
    }
  }
}

TEST(SpaceInvaders, InitialLayout) {
  SpaceInvadersEnv env({1, 2});
  const GridState g = env.observe();
  for (int y = 0; y < kBoardSize; ++y) {
    for (int x = 0; x < kBoardSize; ++x) {
      const bool block = y < SpaceInvadersEnv::kAlienRows && x >= SpaceInvadersEnv::kAlienColBegin &&
                         x < SpaceInvadersEnv::kAlienColEnd;
      if (block) {
        EXPECT_EQ(g.at(x, y), 2) << x << "," << y;
      }
    }
  }
  EXPECT_EQ(count_code(g, 2), 24);
  EXPECT_EQ(count_code(g, 1), 1);
  EXPECT_EQ(g.at(env.cannon_x(), kBoardSize - 1), 1);
}

TEST(SpaceInvaders, FireSpawnsBulletAboveCannon) {
  SpaceInvadersEnv env({1, 2});
  EXPECT_EQ(env.oracle_action(), Action::Fire);  // under the block, no threat
  env.step(Action::Fire);
  EXPECT_EQ(env.observe().at(env.cannon_x(), kBoardSize - 2), 3);
  env.step(Action::NoOp);
  EXPECT_EQ(env.observe().at(env.cannon_x(), kBoardSize - 3), 3);
}

TEST(Envs, OracleTotalityUnderRandomPlay) {
  int rollouts = 0;
  for (EnvTag tag : {EnvTag::Maze, EnvTag::Asterix, EnvTag::SpaceInvaders}) {
    const EnvSpec& spec = env_spec(tag);
    std::set<int> codes;
    for (const auto& o : spec.objects) codes.insert(o.code);
    for (std::uint64_t s = 0; s < 3334; ++s, ++rollouts) {
      Rng rng(derive_seed(s, static_cast<std::uint64_t>(tag)));
      auto env = make_environment(tag, {rng.next(), rng.next()});
      for (int i = 0; i < 30 && !env->done(); ++i) {
        ASSERT_TRUE(spec.allows(env->oracle_action()));
        const GridState g = env->observe();
        ASSERT_EQ(g.height, spec.height);
        ASSERT_EQ(g.width, spec.width);
        for (auto c : g.cells) ASSERT_TRUE(codes.count(c)) << int(c);
        env->step(spec.actions[rng.below(spec.actions.size())]);
      }
    }
  }
  EXPECT_GE(rollouts, 10000);
}

TEST(Envs, CloneIsIndependent) {
  auto a = make_environment(EnvTag::SpaceInvaders, {4, 4});
  auto b = a->clone();
  a->step(Action::Left);
  EXPECT_NE(a->observe(), b->observe());
  b->step(Action::Left);
  EXPECT_EQ(a->observe(), b->observe());
}
