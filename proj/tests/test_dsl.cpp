#include <gtest/gtest.h>

#include "gridsynth/errors.hpp"
#include "test_util.hpp"

using namespace gridsynth;
using namespace testutil;

TEST(Types, ParseAndPrint) {
  const Type t = parse_type("map -> direction -> action");
  EXPECT_EQ(t.str(), "map -> direction -> action");
  EXPECT_EQ(t.arity(), 2);
  EXPECT_EQ(t.result(), Type::base(BaseType::Action));
  EXPECT_EQ(parse_type("(t0 -> t0) -> bool").str(), "(t0 -> t0) -> bool");
  EXPECT_EQ(parse_type("map → action"), request_type(EnvTag::Asterix));
}

TEST(Types, UnificationBindsVariables) {
  Substitution s;
  EXPECT_TRUE(s.unify(Type::var(0), Type::base(BaseType::Int)));
  EXPECT_EQ(s.apply(Type::function({Type::var(0)}, Type::var(0))).str(), "int -> int");
  EXPECT_FALSE(s.unify(Type::var(0), Type::base(BaseType::Bool)));
  Substitution occurs;
  EXPECT_FALSE(occurs.unify(Type::var(1), Type::arrow(Type::var(1), Type::base(BaseType::Int))));
}

TEST(Parse, WallCheckHasVarAtGetSite) {
  const TermPtr t = parse(kWallCheck);
  ASSERT_TRUE(t->is_lambda());
  std::vector<const Term*> args;
  const Term* head = t->body()->spine(&args);
  ASSERT_TRUE(head->is_prim());
  EXPECT_EQ(head->primitive().name, "if");
  ASSERT_EQ(args.size(), 3u);
  std::vector<const Term*> cond_args;
  args[0]->spine(&cond_args);
  std::vector<const Term*> get_args;
  const Term* get = cond_args[1]->spine(&get_args);
  EXPECT_EQ(get->primitive().name, "get");
  ASSERT_TRUE(get_args[0]->is_var());
  EXPECT_EQ(get_args[0]->index(), 0);
}

TEST(Parse, IdentityAndSyntaxErrors) {
  const TermPtr id = parse("(λ(x) x)");
  ASSERT_TRUE(id->is_lambda());
  EXPECT_TRUE(id->body()->is_var());
  EXPECT_EQ(infer_type(id).str(), "t0 -> t0");
  EXPECT_THROW(parse("(λ(x) (get x 1 0"), SyntaxError);
  EXPECT_THROW(parse("(λ(x) y)"), UnboundVariable);
  EXPECT_THROW(parse("(λ(x) jump-action)"), UnknownPrimitive);
  EXPECT_THROW(parse("(λ(x) left-action))"), SyntaxError);
}

TEST(Parse, AcceptsAsciiLambdaAndMultiBinders) {
  const TermPtr a = parse("(lambda (m d) (if (eq-direction? direction-3 d) left-action forward-action))");
  const TermPtr b = parse("(λ(m) (λ(d) (if (eq-direction? direction-3 d) left-action forward-action)))");
  EXPECT_TRUE(terms_equal(a, b));
  EXPECT_TRUE(terms_equal(parse("(λ(x) left)"), parse("(λ(x) left-action)")));
}

TEST(Print, CanonicalForms) {
  EXPECT_EQ(print_program(parse("(lambda (m) left-action)")), "(λ(x) left-action)");
  EXPECT_EQ(print_program(parse(kWallCheck)), kWallCheck);
  EXPECT_EQ(print_program(parse("(lambda (a b) (if (eq-direction? a b) left right))")),
            "(λ(x) (λ(y) (if (eq-direction? x y) left-action right-action)))");
}

TEST(Infer, ExampleTypes) {
  EXPECT_EQ(infer_type(parse(kWallCheck)).str(), "map -> action");
  // the map parameter is unused, so the principal type leaves it open
  const TermPtr two = parse("(λ(m) (λ(d) (if (eq-direction? direction-3 d) left-action forward-action)))");
  EXPECT_EQ(infer_type(two).str(), "t0 -> direction -> action");
  EXPECT_NO_THROW(check_type(two, request_type(EnvTag::Maze)));
  EXPECT_THROW(check_type(two, parse_type("map -> int -> action")), TypeMismatch);
  EXPECT_THROW(infer_type(parse("(λ(m) (eq-obj? wall-obj wall-obj))")), TypeMismatch);
  try {
    infer_type(parse("(λ(m) (eq-obj? wall-obj wall-obj))"));
  } catch (const TypeMismatch& e) {
    EXPECT_EQ(e.expected(), "mapObject");
    EXPECT_EQ(e.found(), "object");
  }
}

TEST(Infer, IfIsPolymorphicPerUse) {
  const TermPtr t = parse(
      "(λ(m) (λ(d) (if (eq-obj? (if (eq-direction? d direction-0) wall-obj empty-obj) (get m 1 0)) "
      "left-action right-action)))");
  EXPECT_EQ(infer_type(t).str(), "map -> direction -> action");
}

TEST(Exec, WallCheckSemantics) {
  const TermPtr p = parse(kWallCheck);
  GridState s = empty_maze_view();
  EXPECT_EQ(exec(p, s), Action::Forward);
  s.set(1, 0, kMazeWall);
  EXPECT_EQ(exec(p, s), Action::Left);
  s.set(1, 0, kMazeEmpty);
  s.set(0, 1, kMazeWall);  // transposed coordinates do not matter
  EXPECT_EQ(exec(p, s), Action::Forward);
}

TEST(Exec, ConstantProgramOnSpaceInvaders) {
  Rng rng(3);
  const TermPtr p = parse("(λ(m) no-op)", EnvTag::SpaceInvaders);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(exec(p, random_state(EnvTag::SpaceInvaders, rng)), Action::NoOp);
  }
}

TEST(Exec, OutOfBoundsGetRaises) {
  const TermPtr p = parse("(λ(x) (if (eq-obj? wall-obj (get x 5 0)) left-action forward-action))");
  EXPECT_THROW(exec(p, empty_maze_view()), OutOfBoundsGet);
  EXPECT_FALSE(try_exec(p, empty_maze_view()).has_value());
}

TEST(Exec, ProjectionsAndBooleans) {
  const TermPtr p = parse(
      "(λ(m) (if (and (gt-x? (get-x (get m 3 1)) (get-x (get m 1 4))) "
      "(not (eq-y? (get-y (get m 3 1)) (get-y (get m 1 4))))) "
      "(if (or (eq-obj? enemy-obj (get m 0 0)) (eq-x? (get-x (get m 2 2)) (get-x (get m 2 7)))) up down) no-op))",
      EnvTag::Asterix);
  GridState s(EnvTag::Asterix, kBoardSize, kBoardSize);
  EXPECT_EQ(exec(p, s), Action::Up);
  const TermPtr q = parse("(λ(m) (if (eq-obj? (get-game-obj (get m 4 4)) (get m 4 4)) left right))",
                          EnvTag::Asterix);
  s.set(4, 4, 3);
  EXPECT_EQ(exec(q, s), Action::Left);
}

TEST(Exec, WrongArityIsTypeMismatch) {
  const TermPtr two = parse("(λ(m) (λ(d) left-action))");
  GridState s(EnvTag::Asterix, kBoardSize, kBoardSize);
  EXPECT_THROW(exec(two, s), TypeMismatch);
}

TEST(Terms, BetaNormalizeAndShift) {
  const auto prims = make_prim_table(EnvTag::Maze);
  // (λ a. λ b. a) left right  ->  left
  const TermPtr k = Term::lambda(Term::lambda(Term::var(1)));
  const TermPtr app = Term::apply_all(k, {Term::prim(prims.at("left-action")), Term::prim(prims.at("right-action"))});
  EXPECT_EQ(print_program(Term::lambda(beta_normalize(app))), "(λ(x) left-action)");
  const TermPtr open = Term::var(0);
  EXPECT_EQ(shift(open, 2)->index(), 2);
  EXPECT_EQ(shift(Term::lambda(Term::var(0)), 2)->body()->index(), 0);
}

TEST(Terms, DepthCountsBindersAndSpines) {
  EXPECT_EQ(parse("(λ(x) left-action)")->depth(), 2);
  EXPECT_EQ(parse(kWallCheck)->depth(), 5);
  EXPECT_EQ(parse("(λ(x) (λ(y) left-action))")->depth(), 3);
}

TEST(Properties, RoundTripTypeSoundnessAndPurity) {
  for (EnvTag env : {EnvTag::Maze, EnvTag::Asterix, EnvTag::SpaceInvaders}) {
    const auto prims = make_prim_table(env);
    const Grammar g = Grammar::uniform(prims);
    const int d_max = env == EnvTag::Maze ? 6 : 20;
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
      SampleConfig cfg{d_max, request_type(env), derive_seed(1234, static_cast<std::uint64_t>(i))};
      const TermPtr t = sample_program(g, cfg);
      ASSERT_NO_THROW(check_type(t, request_type(env))) << print_program(t);
      if (i % 10 == 0) {
        const TermPtr back = parse_program(print_program(t), prims);
        ASSERT_TRUE(terms_equal(t, back)) << print_program(t);
      }
      const GridState s = random_state(env, rng);
      EvalError err;
      const auto v1 = evaluate_program(t, s, &err);
      ASSERT_NE(err.code, EvalErrorCode::TypeMismatch) << err.message << " in " << print_program(t);
      const auto v2 = evaluate_program(t, s);
      ASSERT_EQ(v1.has_value(), v2.has_value());
      if (v1) {
        ASSERT_EQ(v1->kind, ValueKind::Action);
        ASSERT_EQ(*v1, *v2);
      }
    }
  }
}
