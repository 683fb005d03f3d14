#include "gridsynth/dsl.hpp"

#include <cctype>
#include <functional>

#include "gridsynth/errors.hpp"
#include "gridsynth/eval.hpp"

namespace gridsynth {

namespace {

Type B(BaseType b) { return Type::base(b); }

PrimitivePtr constant(std::string name, BaseType type, Value v) {
  auto p = std::make_shared<Primitive>();
  p->name = std::move(name);
  p->type = B(type);
  p->op = Op::Constant;
  p->value = v;
  return p;
}

PrimitivePtr function(std::string name, Type type, Op op) {
  auto p = std::make_shared<Primitive>();
  p->name = std::move(name);
  p->arity = type.arity();
  p->type = std::move(type);
  p->op = op;
  return p;
}

struct ObjectName {
  const char* name;
  int code;
};

}  // namespace

PrimTable make_prim_table(EnvTag env) {
  using BT = BaseType;
  std::vector<PrimitivePtr> prims;

  std::vector<Action> actions;
  std::vector<ObjectName> objects;
  int max_int = 9;
  switch (env) {
    case EnvTag::Maze:
      actions = {Action::Left, Action::Right, Action::Forward};
      objects = {{"empty-obj", 1}, {"wall-obj", 2}, {"goal-obj", 3}};
      max_int = 5;
      break;
    case EnvTag::Asterix:
      actions = {Action::Left, Action::Right, Action::Up, Action::Down, Action::NoOp};
      objects = {{"empty-obj", 0}, {"player-obj", 1}, {"gold-obj", 2}, {"enemy-obj", 3},
                 {"trail-obj", 4}};
      break;
    case EnvTag::SpaceInvaders:
      actions = {Action::Left, Action::Right, Action::Fire, Action::NoOp};
      objects = {{"empty-obj", 0}, {"cannon-obj", 1}, {"alien-obj", 2},
                 {"friendly-bullet-obj", 3}, {"enemy-bullet-obj", 4}};
      break;
  }

  for (Action a : actions) {
    prims.push_back(constant(std::string(action_name(a)) + "-action", BT::Action, Value::action(a)));
  }
  for (int i = 0; i <= max_int; ++i) {
    prims.push_back(constant(std::to_string(i), BT::Int, Value::integer(i)));
  }
  if (env == EnvTag::Maze) {
    for (int d = 0; d < 4; ++d) {
      prims.push_back(constant("direction-" + std::to_string(d), BT::Direction, Value::direction(d)));
    }
  }
  for (const auto& o : objects) {
    prims.push_back(constant(o.name, BT::Object, Value::object(o.code)));
  }

  const Type t0 = Type::var(0);
  prims.push_back(function("if", Type::function({B(BT::Bool), t0, t0}, t0), Op::If));
  if (env == EnvTag::Maze) {
    prims.push_back(function("eq-direction?",
                             Type::function({B(BT::Direction), B(BT::Direction)}, B(BT::Bool)),
                             Op::EqDirection));
  }
  prims.push_back(function("eq-obj?", Type::function({B(BT::Object), B(BT::MapObject)}, B(BT::Bool)),
                           Op::EqObj));
  prims.push_back(function("get", Type::function({B(BT::Map), B(BT::Int), B(BT::Int)}, B(BT::MapObject)),
                           Op::Get));
  prims.push_back(function("get-game-obj", Type::function({B(BT::MapObject)}, B(BT::Object)),
                           Op::GetGameObj));
  prims.push_back(function("not", Type::function({B(BT::Bool)}, B(BT::Bool)), Op::Not));
  prims.push_back(function("and", Type::function({B(BT::Bool), B(BT::Bool)}, B(BT::Bool)), Op::And));
  prims.push_back(function("or", Type::function({B(BT::Bool), B(BT::Bool)}, B(BT::Bool)), Op::Or));
  prims.push_back(function("get-x", Type::function({B(BT::MapObject)}, B(BT::TX)), Op::GetX));
  prims.push_back(function("get-y", Type::function({B(BT::MapObject)}, B(BT::TY)), Op::GetY));
  prims.push_back(function("eq-x?", Type::function({B(BT::TX), B(BT::TX)}, B(BT::Bool)), Op::EqX));
  prims.push_back(function("eq-y?", Type::function({B(BT::TY), B(BT::TY)}, B(BT::Bool)), Op::EqY));
  prims.push_back(function("gt-x?", Type::function({B(BT::TX), B(BT::TX)}, B(BT::Bool)), Op::GtX));
  prims.push_back(function("gt-y?", Type::function({B(BT::TY), B(BT::TY)}, B(BT::Bool)), Op::GtY));
  return PrimTable(env, std::move(prims));
}

PrimitivePtr make_abstraction(std::string name, TermPtr body) {
  if (body->free_bound() != 0) throw UnboundVariable("abstraction body must be closed");
  auto p = std::make_shared<Primitive>();
  p->name = std::move(name);
  p->type = infer_type(body);
  p->op = Op::Abstraction;
  p->arity = lambda_count(*body);
  p->body = std::move(body);
  return p;
}

Type request_type(EnvTag env) {
  if (env == EnvTag::Maze) {
    return Type::function({B(BaseType::Map), B(BaseType::Direction)}, B(BaseType::Action));
  }
  return Type::function({B(BaseType::Map)}, B(BaseType::Action));
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  std::size_t offset = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_ws();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

 private:
  SExpr read() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input");
    char c = text_[pos_];
    if (c == ')') throw SyntaxError("unexpected ')' at offset " + std::to_string(pos_));
    SExpr e;
    e.offset = pos_;
    if (c == '(') {
      ++pos_;
      e.is_list = true;
      for (;;) {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unbalanced '(' opened at offset " + std::to_string(e.offset));
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    e.atom = std::string(text_.substr(start, pos_ - start));
    return e;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool is_lambda_keyword(const SExpr& e) {
  return !e.is_list && (e.atom == "\xCE\xBB" || e.atom == "lambda" || e.atom == "\\");
}

bool looks_like_variable(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])) && s[i] != '_') return false;
  }
  return true;
}

class Builder {
 public:
  Builder(const PrimTable& prims, std::vector<std::string> scope)
      : prims_(prims), scope_(std::move(scope)) {}

  TermPtr sequence(const std::vector<SExpr>& items, std::size_t from) {
    if (from >= items.size()) throw SyntaxError("empty expression");
    if (is_lambda_keyword(items[from])) {
      if (from + 1 >= items.size()) throw SyntaxError("lambda without parameters");
      const SExpr& params = items[from + 1];
      std::vector<std::string> names;
      if (params.is_list) {
        for (const auto& p : params.items) {
          if (p.is_list) throw SyntaxError("lambda parameter must be a name");
          names.push_back(p.atom);
        }
      } else {
        names.push_back(params.atom);
      }
      if (names.empty()) throw SyntaxError("lambda needs at least one parameter");
      if (from + 2 >= items.size()) throw SyntaxError("lambda without body");
      for (const auto& n : names) scope_.push_back(n);
      TermPtr body = sequence(items, from + 2);
      for (std::size_t i = 0; i < names.size(); ++i) {
        scope_.pop_back();
        body = Term::lambda(body);
      }
      return body;
    }
    if (items.size() - from == 1) return expr(items[from]);
    TermPtr head = expr(items[from]);
    for (std::size_t i = from + 1; i < items.size(); ++i) {
      if (is_lambda_keyword(items[i])) {
        // (f λ(x) body) is not allowed; lambdas in argument position need parentheses.
        throw SyntaxError("unparenthesised lambda in argument position");
      }
      head = Term::apply(head, expr(items[i]));
    }
    return head;
  }

  TermPtr expr(const SExpr& e) {
    if (e.is_list) {
      if (e.items.empty()) throw SyntaxError("empty list at offset " + std::to_string(e.offset));
      return sequence(e.items, 0);
    }
    return atom(e.atom);
  }

 private:
  TermPtr atom(const std::string& name) {
    if (is_lambda_keyword(SExpr{false, name, {}, 0})) throw SyntaxError("misplaced lambda");
    for (std::size_t i = scope_.size(); i-- > 0;) {
      if (scope_[i] == name) return Term::var(static_cast<int>(scope_.size() - 1 - i));
    }
    if (auto p = prims_.find(name)) return Term::prim(p);
    if (action_from_name(name)) {
      if (auto p = prims_.find(name + "-action")) return Term::prim(p);
    }
    if (!name.empty() && name[0] == '$') throw UnboundVariable("placeholder '" + name + "'");
    if (looks_like_variable(name)) throw UnboundVariable("'" + name + "'");
    throw UnknownPrimitive("'" + name + "' in " + std::string(env_name(prims_.env())) + " DSL");
  }

  const PrimTable& prims_;
  std::vector<std::string> scope_;
};

}  // namespace

TermPtr parse_program(std::string_view text, const PrimTable& prims, const ParseOptions& options) {
  std::vector<SExpr> items = Reader(text).read_all();
  if (items.empty()) throw SyntaxError("empty program text");
  std::vector<std::string> scope;
  for (int k = 0; k < options.placeholder_slots; ++k) scope.push_back("$" + std::to_string(k));
  Builder builder(prims, std::move(scope));
  TermPtr t = builder.sequence(items, 0);
  for (int k = 0; k < options.placeholder_slots; ++k) t = Term::lambda(t);
  return t;
}

TermPtr parse_abstraction_body(std::string_view text, int arity, const PrimTable& prims) {
  ParseOptions opts;
  opts.placeholder_slots = arity;
  return parse_program(text, prims, opts);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string binder_name(std::size_t depth) {
  static const char* names[] = {"x", "y", "z", "u", "v", "w"};
  if (depth < 6) return names[depth];
  return "x" + std::to_string(depth);
}

void print_term(const Term& t, std::vector<std::string>& scope,
                const std::function<std::string(int)>& free_name, std::string& out) {
  switch (t.kind()) {
    case Term::Kind::Prim:
      out += t.primitive().name;
      return;
    case Term::Kind::Var: {
      auto i = static_cast<std::size_t>(t.index());
      if (i < scope.size()) {
        out += scope[scope.size() - 1 - i];
      } else {
        out += free_name(static_cast<int>(i - scope.size()));
      }
      return;
    }
    case Term::Kind::Lambda: {
      std::string name = binder_name(scope.size());
      out += "(\xCE\xBB(" + name + ") ";
      scope.push_back(name);
      print_term(*t.body(), scope, free_name, out);
      scope.pop_back();
      out += ")";
      return;
    }
    case Term::Kind::Apply: {
      std::vector<const Term*> args;
      const Term* head = t.spine(&args);
      out += "(";
      print_term(*head, scope, free_name, out);
      for (const Term* a : args) {
        out += " ";
        print_term(*a, scope, free_name, out);
      }
      out += ")";
      return;
    }
  }
}

}  // namespace

std::string print_program(const TermPtr& term) {
  std::vector<std::string> scope;
  std::string out;
  print_term(*term, scope, [](int i) { return "#" + std::to_string(i); }, out);
  return out;
}

std::string print_abstraction_body(const TermPtr& body, int arity) {
  TermPtr pattern = strip_lambdas(body, arity);
  std::vector<std::string> scope;
  std::string out;
  // Free index i of the pattern is slot arity-1-i.
  print_term(*pattern, scope, [arity](int i) { return "$" + std::to_string(arity - 1 - i); }, out);
  return out;
}

// ---------------------------------------------------------------------------
// Types

namespace {

Type infer_in(const TermPtr& t, std::vector<Type>& ctx, Substitution& subst) {
  switch (t->kind()) {
    case Term::Kind::Prim:
      return subst.instantiate(t->primitive().type);
    case Term::Kind::Var: {
      auto i = static_cast<std::size_t>(t->index());
      if (i >= ctx.size()) throw UnboundVariable("de Bruijn index " + std::to_string(i));
      return ctx[ctx.size() - 1 - i];
    }
    case Term::Kind::Lambda: {
      Type arg = Type::var(subst.fresh());
      ctx.push_back(arg);
      Type body = infer_in(t->body(), ctx, subst);
      ctx.pop_back();
      return Type::arrow(arg, body);
    }
    case Term::Kind::Apply: {
      Type fn = infer_in(t->fn(), ctx, subst);
      Type arg = infer_in(t->arg(), ctx, subst);
      Type result = Type::var(subst.fresh());
      Type fn_now = subst.apply(fn);
      if (fn_now.is_arrow()) {
        if (!subst.unify(fn_now.from(), arg)) {
          throw TypeMismatch(canonicalize(subst.apply(fn_now.from())).str(),
                             canonicalize(subst.apply(arg)).str(), print_program(t));
        }
        return fn_now.to();
      }
      if (!subst.unify(fn_now, Type::arrow(arg, result))) {
        throw TypeMismatch("a function", canonicalize(fn_now).str(), print_program(t));
      }
      return result;
    }
  }
  return Type();
}

}  // namespace

Type infer_type(const TermPtr& term) {
  Substitution subst;
  std::vector<Type> ctx;
  Type t = infer_in(term, ctx, subst);
  return canonicalize(subst.apply(t));
}

void check_type(const TermPtr& term, const Type& expected) {
  Substitution subst;
  std::vector<Type> ctx;
  Type t = infer_in(term, ctx, subst);
  Type want = subst.instantiate(expected);
  if (!subst.unify(t, want)) {
    throw TypeMismatch(expected.str(), canonicalize(subst.apply(t)).str(), print_program(term));
  }
}

Action exec(const TermPtr& program, const GridState& state) {
  EvalError err;
  auto v = evaluate_program(program, state, &err);
  if (!v) {
    if (err.code == EvalErrorCode::OutOfBounds) throw OutOfBoundsGet(err.message);
    throw TypeMismatch("action", err.message, print_program(program));
  }
  if (v->kind != ValueKind::Action) {
    throw TypeMismatch("action", v->str(), print_program(program));
  }
  return static_cast<Action>(v->i);
}

}  // namespace gridsynth
