#include <gtest/gtest.h>

#include <set>
#include <unordered_set>

#include "gridsynth/enumerator.hpp"
#include "test_util.hpp"

using namespace gridsynth;
using namespace testutil;

namespace {

std::set<std::string> yield_all(const Grammar& g, const Type& request, int max_depth) {
  Enumerator e(g, request, max_depth);
  std::set<std::string> out;
  while (auto p = e.next()) {
    EXPECT_TRUE(out.insert(p->text).second) << "duplicate " << p->text;
  }
  return out;
}

std::set<std::string> brute(EnvTag env, const Type& request, int max_depth) {
  const auto list = BruteForce(make_prim_table(env)).programs(request, max_depth);
  std::set<std::string> out(list.begin(), list.end());
  EXPECT_EQ(out.size(), list.size());
  return out;
}

Trajectory single_step(GridState s, Action a, const std::string& id = "t") {
  Trajectory t;
  t.id = id;
  t.env = s.env;
  t.steps.push_back({std::move(s), a});
  return t;
}

}  // namespace

TEST(Enumerator, OrderedUniqueAndConsistentWithDl) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  const Type req = request_type(EnvTag::Maze);
  Enumerator e(g, req, 6);
  std::unordered_set<TermPtr, TermPtrHash, TermPtrEq> seen;
  double last = -1.0;
  std::string last_text;
  for (int i = 0; i < 10000; ++i) {
    auto p = e.next();
    ASSERT_TRUE(p.has_value());
    ASSERT_GE(p->dl + 1e-9, last) << p->text;
    if (std::abs(p->dl - last) < 1e-9) {
      ASSERT_LT(last_text, p->text);
    }
    ASSERT_TRUE(seen.insert(p->term).second) << p->text;
    ASSERT_NEAR(p->dl, description_length(g, p->term, req), 1e-9);
    ASSERT_LE(p->term->depth(), 6);
    ASSERT_EQ(p->text, print_program(p->term));
    last = p->dl;
    last_text = p->text;
  }
}

TEST(Enumerator, ConstantsComeFirst) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  Enumerator e(g, request_type(EnvTag::Maze));
  EXPECT_EQ(e.next()->text, "(λ(x) (λ(y) forward-action))");
  EXPECT_EQ(e.next()->text, "(λ(x) (λ(y) left-action))");
  EXPECT_EQ(e.next()->text, "(λ(x) (λ(y) right-action))");
  EXPECT_EQ(brute(EnvTag::Maze, request_type(EnvTag::Maze), 3).size(), 3u);
}

TEST(Enumerator, CompleteAtDepthBound) {
  const Type maze = request_type(EnvTag::Maze);
  const Grammar gm = Grammar::uniform(make_prim_table(EnvTag::Maze));
  for (int d : {3, 4, 5}) EXPECT_EQ(yield_all(gm, maze, d), brute(EnvTag::Maze, maze, d)) << "depth " << d;
  EXPECT_EQ(yield_all(gm, maze, 5).size(), 228u);

  const Type minatar = request_type(EnvTag::Asterix);
  const Grammar ga = Grammar::uniform(make_prim_table(EnvTag::Asterix));
  for (int d : {2, 3, 4, 5}) {
    EXPECT_EQ(yield_all(ga, minatar, d), brute(EnvTag::Asterix, minatar, d)) << "depth " << d;
  }
}

TEST(Enumerator, WallCheckPositionMatchesDlCensus) {
  const auto prims = make_prim_table(EnvTag::Maze);
  const Grammar g = Grammar::uniform(prims);
  const Type req = parse_type("map -> action");
  const TermPtr target = parse(kWallCheck);
  const double dl = description_length(g, target, req);
  DlCensus census(prims);
  const std::uint64_t strictly_less = census.count(req, dl - 1e-6);
  const std::uint64_t at_most = census.count(req, dl + 1e-6);
  ASSERT_GT(at_most, strictly_less);
  Enumerator e(g, req);
  std::uint64_t position = 0;
  while (auto p = e.next()) {
    ++position;
    if (terms_equal(p->term, target)) break;
    ASSERT_LE(position, at_most);
  }
  EXPECT_GT(position, strictly_less);
  EXPECT_LE(position, at_most);
}

TEST(Enumerator, CensusAgreesWithStreamCounts) {
  const auto prims = make_prim_table(EnvTag::SpaceInvaders);
  const Grammar g = Grammar::uniform(prims);
  const Type req = request_type(EnvTag::SpaceInvaders);
  Enumerator e(g, req);
  std::vector<double> dls;
  for (int i = 0; i < 3000; ++i) dls.push_back(e.next()->dl);
  DlCensus census(prims);
  // every class boundary strictly inside the prefix must match the census
  for (std::size_t i = 1; i + 1 < dls.size(); i += 97) {
    if (std::abs(dls[i] - dls[i + 1]) < 1e-7) continue;
    EXPECT_EQ(census.count(req, dls[i] + 1e-9), i + 1) << "at DL " << dls[i];
  }
}

TEST(SolveTask, LengthOneLeftTask) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  SearchBudget budget;
  budget.timeout_sec = 10;
  const SolvedTask s = solve_task(g, single_step(empty_maze_view(), Action::Left), budget);
  ASSERT_TRUE(s.solved());
  EXPECT_LE(s.candidates_tried, 20u);
  EXPECT_LE(s.dl.front(), description_length(g, parse("(λ(x) (λ(y) left-action))")) + 1e-9);
  EXPECT_EQ(print_program(s.programs.front()), "(λ(x) (λ(y) left-action))");
  EXPECT_LE(static_cast<int>(s.programs.size()), budget.top_k);
  for (std::size_t i = 1; i < s.dl.size(); ++i) EXPECT_LE(s.dl[i - 1], s.dl[i] + 1e-9);
}

TEST(SolveTask, ContradictoryTaskIsUnsolved) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  Trajectory t = single_step(empty_maze_view(), Action::Left);
  t.steps.push_back({empty_maze_view(), Action::Forward});
  SearchBudget budget;
  budget.timeout_sec = 30;
  budget.max_candidates = 20000;
  const SolvedTask s = solve_task(g, t, budget);
  EXPECT_FALSE(s.solved());
  EXPECT_EQ(s.candidates_tried, 20000u);
}

TEST(SolveTask, StoredProgramsImitate) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  const auto oracle = collect_oracle_rollouts(EnvTag::Maze, 1, 5);
  const TaskSet ts = slice(oracle, 3);
  SearchBudget budget;
  budget.timeout_sec = 30;
  budget.max_candidates = 30000;
  budget.top_k = 3;
  for (std::size_t i = 0; i < std::min<std::size_t>(ts.tasks.size(), 10); ++i) {
    const SolvedTask s = solve_task(g, ts.tasks[i], budget);
    for (const auto& p : s.programs) EXPECT_TRUE(imitates(p, ts.tasks[i]));
  }
}

TEST(SolveTasks, ParallelMatchesSequential) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::SpaceInvaders));
  const auto oracle = collect_oracle_rollouts(EnvTag::SpaceInvaders, 1, 9, 120);
  const TaskSet ts = slice(oracle, 3);
  SearchBudget budget;
  budget.timeout_sec = 120;
  budget.max_candidates = 5000;
  budget.top_k = 2;
  const auto seq = solve_tasks(g, ts.tasks, budget, 1);
  const auto par = solve_tasks(g, ts.tasks, budget, 3);
  ASSERT_EQ(seq.size(), par.size());
  EXPECT_EQ(solved_to_json(seq).dump(), solved_to_json(par).dump());
  for (std::size_t i = 0; i < std::min<std::size_t>(seq.size(), 6); ++i) {
    const SolvedTask one = solve_task(g, ts.tasks[i], budget);
    ASSERT_EQ(one.programs.size(), seq[i].programs.size());
    for (std::size_t k = 0; k < one.programs.size(); ++k) {
      EXPECT_TRUE(terms_equal(one.programs[k], seq[i].programs[k]));
    }
    EXPECT_EQ(one.candidates_tried, seq[i].candidates_tried);
  }
}

TEST(SolveTasks, JsonRoundTrip) {
  const auto prims = make_prim_table(EnvTag::Maze);
  const Grammar g = Grammar::uniform(prims);
  SearchBudget budget;
  budget.timeout_sec = 5;
  std::vector<Trajectory> tasks{single_step(empty_maze_view(), Action::Right, "a")};
  const auto solved = solve_tasks(g, tasks, budget);
  const nlohmann::json j = solved_to_json(solved);
  EXPECT_EQ(j.at("version"), kSolvedSchema);
  EXPECT_FALSE(j.dump().find("wallTime") != std::string::npos);
  const auto back = solved_from_json(j, prims);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].task_id, "a");
  EXPECT_EQ(solved_to_json(back).dump(), j.dump());
}
