#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gridsynth/enumerator.hpp"
#include "gridsynth/errors.hpp"
#include "test_util.hpp"

using namespace gridsynth;
using namespace testutil;

namespace {

void expect_normalized(const Grammar& g, const std::vector<BaseType>& env) {
  const auto table = g.choices(env);
  for (int i = 0; i < kNumBaseTypes; ++i) {
    const auto& cs = table->at(static_cast<BaseType>(i));
    if (cs.empty()) continue;
    double total = 0.0;
    for (const auto& c : cs) total += std::exp(c.logp);
    EXPECT_NEAR(total, 1.0, 1e-9) << base_type_name(static_cast<BaseType>(i));
  }
}

double choice_logp(const ChoiceTable& table, BaseType t, const std::string& name, const Grammar& g) {
  const int pos = table.find_production(t, g.table().index_of(name));
  EXPECT_GE(pos, 0) << name;
  return table.at(t)[pos].logp;
}

int productions_of(const PrimTable& prims, BaseType t) {
  int n = 0;
  for (const auto& p : prims.primitives()) {
    const Type r = p->type.result();
    n += (r.is_var() || r.base_type() == t) ? 1 : 0;
  }
  return n;
}

}  // namespace

TEST(Grammar, UniformIsNormalizedEverywhere) {
  for (EnvTag env : {EnvTag::Maze, EnvTag::Asterix, EnvTag::SpaceInvaders}) {
    const Grammar g = Grammar::uniform(make_prim_table(env));
    expect_normalized(g, {});
    expect_normalized(g, {BaseType::Map});
    expect_normalized(g, {BaseType::Map, BaseType::Direction});
    expect_normalized(g, {BaseType::Map, BaseType::Map, BaseType::Int});
  }
}

TEST(Grammar, SampleIsDeterministicAndWellTyped) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  SampleConfig cfg{6, request_type(EnvTag::Maze), 1};
  const TermPtr a = sample_program(g, cfg);
  const TermPtr b = sample_program(g, cfg);
  EXPECT_EQ(print_program(a), print_program(b));
  EXPECT_NO_THROW(check_type(a, request_type(EnvTag::Maze)));
  EXPECT_LE(a->depth(), 6);
}

TEST(Grammar, DepthTwoSamplesAreConstantLambdas) {
  for (EnvTag env : {EnvTag::Asterix, EnvTag::SpaceInvaders}) {
    const auto prims = make_prim_table(env);
    const Grammar g = Grammar::uniform(prims);
    const auto oracle_list = BruteForce(prims).programs(request_type(env), 2);
    const std::set<std::string> oracle(oracle_list.begin(), oracle_list.end());
    EXPECT_EQ(oracle.size(), env_spec(env).actions.size());
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 500; ++s) {
      const TermPtr t = sample_program(g, {2, request_type(env), s});
      seen.insert(print_program(t));
    }
    EXPECT_EQ(seen, oracle);
  }
}

TEST(Grammar, DepthUnsatisfiable) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  EXPECT_THROW(sample_program(g, {2, request_type(EnvTag::Maze), 0}), DepthUnsatisfiable);
  EXPECT_NO_THROW(sample_program(g, {3, request_type(EnvTag::Maze), 0}));
}

TEST(Grammar, RootFrequenciesMatchProbabilities) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  const Type req = request_type(EnvTag::Maze);
  const auto table = g.choices({BaseType::Map, BaseType::Direction});
  std::map<std::string, int> counts;
  constexpr int kSamples = 100000;
  for (int i = 0; i < kSamples; ++i) {
    const TermPtr t = sample_program(g, {6, req, derive_seed(77, static_cast<std::uint64_t>(i))});
    const Term* head = strip_lambdas(t, 2)->spine(nullptr);
    counts[head->primitive().name] += 1;
  }
  for (const auto& c : table->at(BaseType::Action)) {
    const std::string name = g.table().primitives()[c.index]->name;
    const double p = std::exp(c.logp);
    const double se = std::sqrt(p * (1 - p) / kSamples);
    EXPECT_NEAR(counts[name] / static_cast<double>(kSamples), p, 3 * se) << name;
  }
}

TEST(Grammar, DescriptionLengthOfConstant) {
  const auto prims = make_prim_table(EnvTag::Maze);
  const Grammar g = Grammar::uniform(prims);
  const int k = productions_of(prims, BaseType::Action);
  EXPECT_EQ(k, 4);  // three actions plus if
  EXPECT_NEAR(description_length(g, parse("(λ(x) (λ(y) left-action))")), std::log(k), 1e-12);
  EXPECT_NEAR(description_length(g, parse("(λ(x) left-action)")), std::log(k), 1e-12);
  EXPECT_GT(description_length(g, parse(kWallCheck)), description_length(g, parse("(λ(x) left-action)")));
}

TEST(Grammar, DescriptionLengthIsAdditive) {
  const auto prims = make_prim_table(EnvTag::Maze);
  const Grammar g = Grammar::uniform(prims);
  const auto table = g.choices({BaseType::Map});
  // λ(x) (if (eq-obj? wall-obj (get x 1 0)) left-action forward-action)
  const int var_pos = table->find_variable(BaseType::Map, 0);
  ASSERT_GE(var_pos, 0);
  const double expected =
      -(choice_logp(*table, BaseType::Action, "if", g) + choice_logp(*table, BaseType::Bool, "eq-obj?", g) +
        choice_logp(*table, BaseType::Object, "wall-obj", g) + choice_logp(*table, BaseType::MapObject, "get", g) +
        table->at(BaseType::Map)[var_pos].logp + choice_logp(*table, BaseType::Int, "1", g) +
        choice_logp(*table, BaseType::Int, "0", g) + choice_logp(*table, BaseType::Action, "left-action", g) +
        choice_logp(*table, BaseType::Action, "forward-action", g));
  EXPECT_NEAR(description_length(g, parse(kWallCheck)), expected, 1e-9);
  // a map hole offers the variable and the polymorphic if
  EXPECT_NEAR(table->at(BaseType::Map)[var_pos].logp, -std::log(2.0), 1e-12);
}

TEST(Grammar, NotDerivable) {
  const Grammar maze = Grammar::uniform(make_prim_table(EnvTag::Maze));
  const TermPtr t = parse("(λ(m) no-op)", EnvTag::Asterix);
  EXPECT_THROW(description_length(maze, t), NotDerivable);
}

TEST(Grammar, RefitEmptyKeepsUniform) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  const Grammar r = refit(g, std::vector<TermPtr>{});
  const auto a = g.choices({BaseType::Map, BaseType::Direction});
  const auto b = r.choices({BaseType::Map, BaseType::Direction});
  for (int i = 0; i < kNumBaseTypes; ++i) {
    const auto& ca = a->at(static_cast<BaseType>(i));
    const auto& cb = b->at(static_cast<BaseType>(i));
    ASSERT_EQ(ca.size(), cb.size());
    for (std::size_t j = 0; j < ca.size(); ++j) EXPECT_NEAR(ca[j].logp, cb[j].logp, 1e-12);
  }
}

TEST(Grammar, RefitFavoursFrequentProductions) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  std::vector<TermPtr> solved(100, parse("(λ(x) (λ(y) left-action))"));
  const Grammar r = refit(g, solved);
  const auto table = r.choices({BaseType::Map, BaseType::Direction});
  EXPECT_GT(choice_logp(*table, BaseType::Action, "left-action", r),
            choice_logp(*table, BaseType::Action, "right-action", r));
  expect_normalized(r, {BaseType::Map, BaseType::Direction});
  expect_normalized(r, {BaseType::Map});
}

TEST(Grammar, RefitSpeedsUpSearch) {
  const Grammar g = Grammar::uniform(make_prim_table(EnvTag::Maze));
  const TermPtr target = parse("(λ(m) (λ(d) (if (eq-obj? wall-obj (get m 1 2)) right-action forward-action)))");
  Trajectory task;
  task.id = "t";
  GridState s = empty_maze_view();
  task.steps.push_back({s, Action::Forward});
  s.set(1, 2, kMazeWall);
  task.steps.push_back({s, Action::Right});
  s.set(1, 2, kMazeEmpty);
  s.set(3, 3, kMazeWall);
  task.steps.push_back({s, Action::Forward});
  SearchBudget budget;
  budget.timeout_sec = 60;
  budget.top_k = 1;
  const SolvedTask before = solve_task(g, task, budget);
  ASSERT_TRUE(before.solved());
  const Grammar r = refit(g, std::vector<TermPtr>(10, target));
  const SolvedTask after = solve_task(r, task, budget);
  ASSERT_TRUE(after.solved());
  EXPECT_LT(after.candidates_tried, before.candidates_tried);
}

TEST(Grammar, AddedProductionKeepsNormalization) {
  const auto prims = make_prim_table(EnvTag::Maze);
  const Grammar g = Grammar::uniform(prims);
  const TermPtr body = parse_abstraction_body("(if (eq-obj? wall-obj (get $0 1 0)) left-action $1)", 2, prims);
  const Grammar e = g.with_production(make_abstraction("f0", body), 0.0);
  expect_normalized(e, {BaseType::Map, BaseType::Direction});
  EXPECT_GE(e.table().index_of("f0"), 0);
  const auto t = parse_program("(λ(x) (λ(y) (f0 x forward-action)))", e.table());
  EXPECT_LT(description_length(e, t), description_length(e, parse_program(
      "(λ(x) (λ(y) (if (eq-obj? wall-obj (get x 1 0)) left-action forward-action)))", e.table())));
}

TEST(Grammar, JsonRoundTrip) {
  const auto prims = make_prim_table(EnvTag::Asterix);
  const std::vector<TermPtr> solved{parse("(λ(m) up)", EnvTag::Asterix)};
  const Grammar g = refit(Grammar::uniform(prims), solved);
  const nlohmann::json j = grammar_to_json(g);
  EXPECT_EQ(j.at("version"), kGrammarSchema);
  const Grammar back = grammar_from_json(j, prims);
  ASSERT_EQ(back.log_weights().size(), g.log_weights().size());
  for (std::size_t i = 0; i < g.log_weights().size(); ++i) {
    EXPECT_DOUBLE_EQ(back.log_weights()[i], g.log_weights()[i]);
  }
  EXPECT_DOUBLE_EQ(back.log_variable(), g.log_variable());
}
