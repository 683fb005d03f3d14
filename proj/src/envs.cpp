#include "gridsynth/envs.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"

namespace gridsynth {

bool EnvSpec::allows(Action a) const {
  return std::find(actions.begin(), actions.end(), a) != actions.end();
}

const EnvSpec& env_spec(EnvTag tag) {
  static const EnvSpec maze{EnvTag::Maze,
                            {Action::Left, Action::Right, Action::Forward},
                            {{"empty", kMazeEmpty}, {"wall", kMazeWall}, {"goal", kMazeGoal}},
                            kMazeView,
                            kMazeView,
                            request_type(EnvTag::Maze),
                            4 * (2 * kMazeRooms + 1) * (2 * kMazeRooms + 1)};
  static const EnvSpec asterix{
      EnvTag::Asterix,
      {Action::Left, Action::Right, Action::Up, Action::Down, Action::NoOp},
      {{"empty", 0}, {"player", 1}, {"gold", 2}, {"enemy", 3}, {"trail", 4}},
      kBoardSize,
      kBoardSize,
      request_type(EnvTag::Asterix),
      1000};
  static const EnvSpec invaders{
      EnvTag::SpaceInvaders,
      {Action::Left, Action::Right, Action::Fire, Action::NoOp},
      {{"empty", 0}, {"cannon", 1}, {"alien", 2}, {"friendly-bullet", 3}, {"enemy-bullet", 4}},
      kBoardSize,
      kBoardSize,
      request_type(EnvTag::SpaceInvaders),
      1000};
  switch (tag) {
    case EnvTag::Maze:
      return maze;
    case EnvTag::Asterix:
      return asterix;
    case EnvTag::SpaceInvaders:
      return invaders;
  }
  return maze;
}

std::unique_ptr<Environment> make_environment(EnvTag tag, EpisodeSeed seed) {
  switch (tag) {
    case EnvTag::Maze:
      return MazeEnv::generate(seed);
    case EnvTag::Asterix:
      return std::make_unique<AsterixEnv>(seed);
    case EnvTag::SpaceInvaders:
      return std::make_unique<SpaceInvadersEnv>(seed);
  }
  return nullptr;
}

namespace {

void check_action(const EnvSpec& spec, Action a) {
  if (!spec.allows(a)) {
    throw IllegalAction(std::string(action_name(a)) + " is not an action of " +
                        std::string(env_name(spec.tag)));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Maze

std::pair<int, int> heading_delta(int direction) {
  switch (((direction % 4) + 4) % 4) {
    case 0:
      return {1, 0};
    case 1:
      return {0, 1};
    case 2:
      return {-1, 0};
    default:
      return {0, -1};
  }
}

MazeWorld generate_maze(int rooms, Rng& rng) {
  MazeWorld w;
  w.width = w.height = 2 * rooms + 1;
  w.cells.assign(static_cast<std::size_t>(w.width * w.height), kMazeWall);
  std::vector<bool> visited(static_cast<std::size_t>(rooms * rooms), false);
  std::vector<std::pair<int, int>> stack;
  const int sx = static_cast<int>(rng.below(rooms));
  const int sy = static_cast<int>(rng.below(rooms));
  stack.emplace_back(sx, sy);
  visited[sy * rooms + sx] = true;
  w.set(2 * sx + 1, 2 * sy + 1, kMazeEmpty);
  while (!stack.empty()) {
    const auto [cx, cy] = stack.back();
    int options[4];
    int n = 0;
    for (int d = 0; d < 4; ++d) {
      const auto [dx, dy] = heading_delta(d);
      const int nx = cx + dx;
      const int ny = cy + dy;
      if (nx >= 0 && ny >= 0 && nx < rooms && ny < rooms && !visited[ny * rooms + nx]) {
        options[n++] = d;
      }
    }
    if (n == 0) {
      stack.pop_back();
      continue;
    }
    const int d = options[rng.below(static_cast<std::uint64_t>(n))];
    const auto [dx, dy] = heading_delta(d);
    const int nx = cx + dx;
    const int ny = cy + dy;
    visited[ny * rooms + nx] = true;
    w.set(2 * cx + 1 + dx, 2 * cy + 1 + dy, kMazeEmpty);
    w.set(2 * nx + 1, 2 * ny + 1, kMazeEmpty);
    stack.emplace_back(nx, ny);
  }
  return w;
}

bool is_perfect_maze(const MazeWorld& world) {
  const int n = world.width * world.height;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  int open = 0;
  int edges = 0;
  for (int y = 0; y < world.height; ++y) {
    for (int x = 0; x < world.width; ++x) {
      if (world.at(x, y) == kMazeWall) continue;
      ++open;
      for (auto [nx, ny] : {std::pair{x + 1, y}, std::pair{x, y + 1}}) {
        if (world.at(nx, ny) == kMazeWall) continue;
        const int a = find(y * world.width + x);
        const int b = find(ny * world.width + nx);
        if (a == b) return false;  // cycle
        parent[a] = b;
        ++edges;
      }
    }
  }
  return open > 0 && edges == open - 1;
}

MazeEnv::MazeEnv(MazeWorld world, int x, int y, int direction)
    : world_(std::move(world)), x_(x), y_(y), dir_(direction) {
  if (world_.at(x_, y_) == kMazeWall) throw FormatError("agent placed on a wall cell");
}

std::unique_ptr<MazeEnv> MazeEnv::generate(EpisodeSeed seed) {
  Rng rng(seed.layout);
  MazeWorld world = generate_maze(kMazeRooms, rng);
  const int rooms = kMazeRooms * kMazeRooms;
  const int start = static_cast<int>(rng.below(rooms));
  int goal = static_cast<int>(rng.below(rooms - 1));
  if (goal >= start) ++goal;
  const int dir = static_cast<int>(rng.below(4));
  world.set(2 * (goal % kMazeRooms) + 1, 2 * (goal / kMazeRooms) + 1, kMazeGoal);
  return std::make_unique<MazeEnv>(std::move(world), 2 * (start % kMazeRooms) + 1,
                                   2 * (start / kMazeRooms) + 1, dir);
}

const EnvSpec& MazeEnv::spec() const { return env_spec(EnvTag::Maze); }

int MazeEnv::relative(int forward, int lateral) const {
  const auto [fx, fy] = heading_delta(dir_);
  const auto [rx, ry] = heading_delta(dir_ + 1);
  return world_.at(x_ + forward * fx + lateral * rx, y_ + forward * fy + lateral * ry);
}

GridState MazeEnv::observe() const {
  GridState s(EnvTag::Maze, kMazeView, kMazeView);
  for (int r = 0; r < kMazeView; ++r) {
    for (int c = 0; c < kMazeView; ++c) s.set(c, r, relative(c, r - 2));
  }
  s.direction = dir_;
  return s;
}

bool MazeEnv::step(Action a) {
  check_action(spec(), a);
  if (done_) return true;
  ++steps_;
  last_was_right_ = false;
  switch (a) {
    case Action::Left:
      dir_ = (dir_ + 3) % 4;
      break;
    case Action::Right:
      dir_ = (dir_ + 1) % 4;
      last_was_right_ = true;
      break;
    default: {
      const auto [dx, dy] = heading_delta(dir_);
      if (world_.at(x_ + dx, y_ + dy) != kMazeWall) {
        x_ += dx;
        y_ += dy;
        if (world_.at(x_, y_) == kMazeGoal) done_ = true;
      }
      break;
    }
  }
  if (steps_ >= spec().max_steps) done_ = true;
  return done_;
}

Action MazeEnv::oracle_action() const {
  const bool ahead_open = relative(1, 0) != kMazeWall;
  const bool right_open = relative(0, 1) != kMazeWall;
  if (last_was_right_ && ahead_open) return Action::Forward;
  if (right_open) return Action::Right;
  if (ahead_open) return Action::Forward;
  return Action::Left;
}

std::unique_ptr<Environment> MazeEnv::clone() const { return std::make_unique<MazeEnv>(*this); }

// ---------------------------------------------------------------------------
// Asterix

AsterixEnv::AsterixEnv(EpisodeSeed seed) : rng_(derive_seed(seed.dynamics, seed.layout)) {
  spawn();
}

const EnvSpec& AsterixEnv::spec() const { return env_spec(EnvTag::Asterix); }

void AsterixEnv::spawn() {
  std::vector<int> free_rows;
  for (int y = 1; y <= 8; ++y) {
    const bool taken = std::any_of(entities_.begin(), entities_.end(),
                                   [y](const AsterixEntity& e) { return e.y == y; });
    if (!taken) free_rows.push_back(y);
  }
  if (free_rows.empty()) return;
  const int y = free_rows[rng_.below(free_rows.size())];
  const bool from_left = rng_.chance(0.5);
  const bool gold = rng_.below(3) == 0;
  entities_.push_back({from_left ? 0 : kBoardSize - 1, y, from_left ? 1 : -1, gold});
}

void AsterixEnv::collide() {
  for (auto it = entities_.begin(); it != entities_.end();) {
    if (it->x == px_ && it->y == py_) {
      if (!it->gold) {
        done_ = true;
        return;
      }
      it = entities_.erase(it);
    } else {
      ++it;
    }
  }
}

bool AsterixEnv::step(Action a) {
  check_action(spec(), a);
  if (done_) return true;
  ++steps_;
  ++tick_;
  switch (a) {
    case Action::Left:
      px_ = std::max(0, px_ - 1);
      break;
    case Action::Right:
      px_ = std::min(kBoardSize - 1, px_ + 1);
      break;
    case Action::Up:
      py_ = std::max(1, py_ - 1);
      break;
    case Action::Down:
      py_ = std::min(8, py_ + 1);
      break;
    default:
      break;
  }
  collide();
  if (done_) return true;
  if (tick_ % kMoveInterval == 0) {
    for (auto& e : entities_) e.x += e.dx;
    std::erase_if(entities_, [](const AsterixEntity& e) { return e.x < 0 || e.x >= kBoardSize; });
    collide();
    if (done_) return true;
  }
  if (tick_ % kSpawnInterval == 0) {
    spawn();
    collide();
  }
  if (steps_ >= spec().max_steps) done_ = true;
  return done_;
}

GridState AsterixEnv::observe() const {
  GridState s(EnvTag::Asterix, kBoardSize, kBoardSize, 0);
  for (const auto& e : entities_) {
    const int tx = e.x - e.dx;
    if (tx >= 0 && tx < kBoardSize) s.set(tx, e.y, 4);
  }
  for (const auto& e : entities_) s.set(e.x, e.y, e.gold ? 2 : 3);
  s.set(px_, py_, 1);
  return s;
}

Action AsterixEnv::oracle_action() const {
  auto enemy_at = [&](int x, int y) {
    return std::any_of(entities_.begin(), entities_.end(),
                       [&](const AsterixEntity& e) { return !e.gold && e.x == x && e.y == y; });
  };
  auto threatened = [&](int x, int y) {
    return enemy_at(x, y) || enemy_at(x - 1, y) || enemy_at(x + 1, y) || enemy_at(x, y - 1) ||
           enemy_at(x, y + 1);
  };
  struct Move {
    Action action;
    int dx;
    int dy;
  };
  auto legal = [&](const Move& m) {
    const int nx = px_ + m.dx;
    const int ny = py_ + m.dy;
    return nx >= 0 && nx < kBoardSize && ny >= 1 && ny <= 8;
  };
  if (threatened(px_, py_)) {
    std::vector<Move> moves;
    if (enemy_at(px_ - 1, py_)) moves.push_back({Action::Right, 1, 0});
    if (enemy_at(px_ + 1, py_)) moves.push_back({Action::Left, -1, 0});
    if (enemy_at(px_, py_ - 1)) moves.push_back({Action::Down, 0, 1});
    if (enemy_at(px_, py_ + 1)) moves.push_back({Action::Up, 0, -1});
    for (const Move m : {Move{Action::Up, 0, -1}, Move{Action::Down, 0, 1},
                         Move{Action::Left, -1, 0}, Move{Action::Right, 1, 0}}) {
      moves.push_back(m);
    }
    for (const auto& m : moves) {
      if (legal(m) && !threatened(px_ + m.dx, py_ + m.dy)) return m.action;
    }
    return Action::NoOp;
  }
  const AsterixEntity* best = nullptr;
  int best_d = 0;
  for (const auto& e : entities_) {
    if (!e.gold) continue;
    const int d = std::abs(e.x - px_) + std::abs(e.y - py_);
    if (!best || d < best_d || (d == best_d && (e.y < best->y || (e.y == best->y && e.x < best->x)))) {
      best = &e;
      best_d = d;
    }
  }
  if (!best) return Action::NoOp;
  if (best->y < py_) return Action::Up;
  if (best->y > py_) return Action::Down;
  if (best->x < px_) return Action::Left;
  if (best->x > px_) return Action::Right;
  return Action::NoOp;
}

std::unique_ptr<Environment> AsterixEnv::clone() const { return std::make_unique<AsterixEnv>(*this); }

// ---------------------------------------------------------------------------
// Space Invaders

SpaceInvadersEnv::SpaceInvadersEnv(EpisodeSeed seed)
    : rng_(derive_seed(seed.dynamics, seed.layout)) {
  reset_aliens();
}

const EnvSpec& SpaceInvadersEnv::spec() const { return env_spec(EnvTag::SpaceInvaders); }

void SpaceInvadersEnv::reset_aliens() {
  aliens_.assign(kBoardSize * kBoardSize, 0);
  for (int y = 0; y < kAlienRows; ++y) {
    for (int x = kAlienColBegin; x < kAlienColEnd; ++x) aliens_[y * kBoardSize + x] = 1;
  }
  alien_dx_ = -1;
}

void SpaceInvadersEnv::resolve_hits() {
  for (auto it = friendly_.begin(); it != friendly_.end();) {
    if (alien(it->first, it->second)) {
      aliens_[it->second * kBoardSize + it->first] = 0;
      it = friendly_.erase(it);
    } else {
      ++it;
    }
  }
}

bool SpaceInvadersEnv::step(Action a) {
  check_action(spec(), a);
  if (done_) return true;
  ++steps_;
  ++tick_;
  if (cooldown_ > 0) --cooldown_;
  const int bottom = kBoardSize - 1;

  if (a == Action::Left) cannon_ = std::max(0, cannon_ - 1);
  if (a == Action::Right) cannon_ = std::min(bottom, cannon_ + 1);

  for (auto& b : friendly_) --b.second;
  std::erase_if(friendly_, [](const auto& b) { return b.second < 0; });
  if (a == Action::Fire && cooldown_ == 0) {
    friendly_.emplace_back(cannon_, bottom - 1);
    cooldown_ = kFireCooldown;
  }
  resolve_hits();

  for (auto& b : enemy_) ++b.second;
  std::erase_if(enemy_, [&](const auto& b) { return b.second > bottom; });
  for (const auto& b : enemy_) {
    if (b.first == cannon_ && b.second == bottom) done_ = true;
  }

  if (tick_ % kAlienMoveInterval == 0) {
    bool blocked = false;
    for (int y = 0; y < kBoardSize; ++y) {
      for (int x = 0; x < kBoardSize; ++x) {
        if (alien(x, y) && (x + alien_dx_ < 0 || x + alien_dx_ >= kBoardSize)) blocked = true;
      }
    }
    std::vector<std::uint8_t> moved(aliens_.size(), 0);
    for (int y = 0; y < kBoardSize; ++y) {
      for (int x = 0; x < kBoardSize; ++x) {
        if (!alien(x, y)) continue;
        const int nx = blocked ? x : x + alien_dx_;
        const int ny = blocked ? y + 1 : y;
        if (ny >= kBoardSize) {
          done_ = true;
          continue;
        }
        moved[ny * kBoardSize + nx] = 1;
      }
    }
    aliens_ = std::move(moved);
    if (blocked) alien_dx_ = -alien_dx_;
    resolve_hits();
    for (int x = 0; x < kBoardSize; ++x) {
      if (alien(x, bottom)) done_ = true;
    }
  }

  if (tick_ % kEnemyShotInterval == 0) {
    std::vector<int> columns;
    for (int x = 0; x < kBoardSize; ++x) {
      for (int y = 0; y < kBoardSize; ++y) {
        if (alien(x, y)) {
          columns.push_back(x);
          break;
        }
      }
    }
    if (!columns.empty()) {
      const int x = columns[rng_.below(columns.size())];
      int y = kBoardSize - 1;
      while (!alien(x, y)) --y;
      if (y + 1 <= bottom) enemy_.emplace_back(x, y + 1);
    }
  }

  if (std::all_of(aliens_.begin(), aliens_.end(), [](std::uint8_t c) { return c == 0; })) {
    reset_aliens();
  }
  if (steps_ >= spec().max_steps) done_ = true;
  return done_;
}

GridState SpaceInvadersEnv::observe() const {
  GridState s(EnvTag::SpaceInvaders, kBoardSize, kBoardSize, 0);
  for (int y = 0; y < kBoardSize; ++y) {
    for (int x = 0; x < kBoardSize; ++x) {
      if (alien(x, y)) s.set(x, y, 2);
    }
  }
  for (const auto& [x, y] : enemy_) s.set(x, y, 4);
  for (const auto& [x, y] : friendly_) s.set(x, y, 3);
  s.set(cannon_, kBoardSize - 1, 1);
  return s;
}

Action SpaceInvadersEnv::oracle_action() const {
  auto threat_in = [&](int col) {
    return std::any_of(enemy_.begin(), enemy_.end(),
                       [&](const auto& b) { return b.first == col && b.second >= kBoardSize - 4; });
  };
  if (threat_in(cannon_)) {
    if (cannon_ > 0 && !threat_in(cannon_ - 1)) return Action::Left;
    if (cannon_ < kBoardSize - 1 && !threat_in(cannon_ + 1)) return Action::Right;
  }
  int best = -1;
  for (int x = 0; x < kBoardSize; ++x) {
    bool any = false;
    for (int y = 0; y < kBoardSize && !any; ++y) any = alien(x, y);
    if (any && (best < 0 || std::abs(x - cannon_) < std::abs(best - cannon_))) best = x;
  }
  if (best < 0) return Action::NoOp;
  if (best == cannon_) return Action::Fire;
  return best < cannon_ ? Action::Left : Action::Right;
}

std::unique_ptr<Environment> SpaceInvadersEnv::clone() const {
  return std::make_unique<SpaceInvadersEnv>(*this);
}

}  // namespace gridsynth
