#include "gridsynth/eval.hpp"

#include <array>

#include "gridsynth/dsl.hpp"

namespace gridsynth {

namespace {

class Machine {
 public:
  Machine(const GridState& state, Tracer* tracer) : state_(state), tracer_(tracer) {}

  bool eval(const Term& t, const std::vector<Value>& env, Value& out) {
    switch (t.kind()) {
      case Term::Kind::Prim:
        return eval_prim(t.primitive(), out);
      case Term::Kind::Var: {
        auto i = static_cast<std::size_t>(t.index());
        if (i >= env.size()) return fail(EvalErrorCode::TypeMismatch, "unbound variable");
        out = env[env.size() - 1 - i];
        return true;
      }
      case Term::Kind::Lambda: {
        auto fn = std::make_shared<FunctionValue>();
        fn->body = t.body();
        fn->values = env;
        out = Value::make(ValueKind::Function, 0);
        out.fn = std::move(fn);
        return true;
      }
      case Term::Kind::Apply:
        return eval_apply(t, env, out);
    }
    return false;
  }

  EvalError error;

 private:
  bool fail(EvalErrorCode code, std::string msg) {
    error.code = code;
    error.message = std::move(msg);
    return false;
  }

  bool eval_prim(const Primitive& p, Value& out) {
    if (p.op == Op::Constant) {
      out = p.value;
      return true;
    }
    if (p.arity == 0 && p.is_abstraction()) return call_abstraction(p, {}, out);
    auto fn = std::make_shared<FunctionValue>();
    fn->prim = &p;
    out = Value::make(ValueKind::Function, 0);
    out.fn = std::move(fn);
    return true;
  }

  bool eval_apply(const Term& t, const std::vector<Value>& env, Value& out) {
    std::array<const Term*, 8> small{};
    std::vector<const Term*> large;
    std::size_t n = 0;
    const Term* head = &t;
    while (head->is_apply()) {
      ++n;
      head = head->fn().get();
    }
    const Term** args = small.data();
    if (n > small.size()) {
      large.resize(n);
      args = large.data();
    }
    {
      const Term* cur = &t;
      for (std::size_t i = n; i-- > 0;) {
        args[i] = cur->arg().get();
        cur = cur->fn().get();
      }
    }

    std::size_t used = 0;
    Value acc;
    if (head->is_prim() && head->primitive().arity > 0 &&
        static_cast<std::size_t>(head->primitive().arity) <= n) {
      const Primitive& p = head->primitive();
      used = static_cast<std::size_t>(p.arity);
      if (p.op == Op::If) {
        Value cond;
        if (!eval(*args[0], env, cond)) return false;
        if (cond.kind != ValueKind::Bool) return fail(EvalErrorCode::TypeMismatch, "if: condition is not bool");
        int handle = tracer_ ? tracer_->begin_call(p, std::span<const Value>(&cond, 1)) : -1;
        if (tracer_) tracer_->on_branch(handle, cond.i != 0);
        if (!eval(*args[cond.i ? 1 : 2], env, acc)) return false;
        if (tracer_) tracer_->end_call(handle, acc);
      } else if (p.is_abstraction()) {
        std::vector<Value> values(used);
        for (std::size_t i = 0; i < used; ++i) {
          if (!eval(*args[i], env, values[i])) return false;
        }
        if (!call_abstraction(p, std::move(values), acc)) return false;
      } else {
        std::array<Value, 3> values;
        for (std::size_t i = 0; i < used; ++i) {
          if (!eval(*args[i], env, values[i])) return false;
        }
        if (!call_builtin(p, std::span<const Value>(values.data(), used), acc)) return false;
      }
    } else {
      if (!eval(*head, env, acc)) return false;
    }
    for (std::size_t i = used; i < n; ++i) {
      Value arg;
      if (!eval(*args[i], env, arg)) return false;
      Value next;
      if (!apply_value(acc, arg, next)) return false;
      acc = std::move(next);
    }
    out = std::move(acc);
    return true;
  }

  bool apply_value(const Value& fn, const Value& arg, Value& out) {
    if (fn.kind != ValueKind::Function || !fn.fn) {
      return fail(EvalErrorCode::TypeMismatch, "applying a non-function " + fn.str());
    }
    const FunctionValue& f = *fn.fn;
    std::vector<Value> values = f.values;
    values.push_back(arg);
    if (f.prim) {
      const Primitive& p = *f.prim;
      if (static_cast<int>(values.size()) < p.arity) {
        auto partial = std::make_shared<FunctionValue>();
        partial->prim = &p;
        partial->values = std::move(values);
        out = Value::make(ValueKind::Function, 0);
        out.fn = std::move(partial);
        return true;
      }
      if (p.is_abstraction()) return call_abstraction(p, std::move(values), out);
      if (p.op == Op::If) {
        if (values[0].kind != ValueKind::Bool) return fail(EvalErrorCode::TypeMismatch, "if: condition is not bool");
        int handle = tracer_ ? tracer_->begin_call(p, std::span<const Value>(values.data(), 1)) : -1;
        if (tracer_) tracer_->on_branch(handle, values[0].i != 0);
        out = values[values[0].i ? 1 : 2];
        if (tracer_) tracer_->end_call(handle, out);
        return true;
      }
      return call_builtin(p, values, out);
    }
    return eval(*f.body, values, out);
  }

  bool call_abstraction(const Primitive& p, std::vector<Value> args, Value& out) {
    int handle = tracer_ ? tracer_->begin_call(p, args) : -1;
    TermPtr pattern = strip_lambdas(p.body, p.arity);
    if (!eval(*pattern, args, out)) return false;
    if (tracer_) tracer_->end_call(handle, out);
    return true;
  }

  static bool kinds(std::span<const Value> args, std::initializer_list<ValueKind> want) {
    std::size_t i = 0;
    for (ValueKind k : want) {
      if (args[i++].kind != k) return false;
    }
    return true;
  }

  bool call_builtin(const Primitive& p, std::span<const Value> a, Value& out) {
    if (p.op == Op::Get && kinds(a, {ValueKind::Map, ValueKind::Int, ValueKind::Int}) &&
        !a[0].map->in_bounds(a[1].i, a[2].i)) {
      const GridState& g = *a[0].map;
      return fail(EvalErrorCode::OutOfBounds,
                  "get " + std::to_string(a[1].i) + " " + std::to_string(a[2].i) + " on a " +
                      std::to_string(g.width) + "x" + std::to_string(g.height) + " grid");
    }
    int handle = tracer_ ? tracer_->begin_call(p, a) : -1;
    auto mismatch = [&] { return fail(EvalErrorCode::TypeMismatch, p.name + ": bad argument kinds"); };
    using K = ValueKind;
    switch (p.op) {
      case Op::And:
        if (!kinds(a, {K::Bool, K::Bool})) return mismatch();
        out = Value::boolean(a[0].i && a[1].i);
        break;
      case Op::Or:
        if (!kinds(a, {K::Bool, K::Bool})) return mismatch();
        out = Value::boolean(a[0].i || a[1].i);
        break;
      case Op::Not:
        if (!kinds(a, {K::Bool})) return mismatch();
        out = Value::boolean(!a[0].i);
        break;
      case Op::EqDirection:
        if (!kinds(a, {K::Direction, K::Direction})) return mismatch();
        out = Value::boolean(a[0].i == a[1].i);
        break;
      case Op::EqObj:
        if (!kinds(a, {K::Object, K::MapObject})) return mismatch();
        out = Value::boolean(a[0].i == a[1].i);
        break;
      case Op::Get: {
        if (!kinds(a, {K::Map, K::Int, K::Int})) return mismatch();
        const GridState& g = *a[0].map;
        int x = a[1].i;
        int y = a[2].i;
        if (tracer_) tracer_->on_cell_read(x, y);
        out = Value::map_object(g.at(x, y), x, y);
        break;
      }
      case Op::GetGameObj:
        if (!kinds(a, {K::MapObject})) return mismatch();
        out = Value::object(a[0].i);
        break;
      case Op::GetX:
        if (!kinds(a, {K::MapObject})) return mismatch();
        out = Value::tx(a[0].x);
        break;
      case Op::GetY:
        if (!kinds(a, {K::MapObject})) return mismatch();
        out = Value::ty(a[0].y);
        break;
      case Op::EqX:
        if (!kinds(a, {K::TX, K::TX})) return mismatch();
        out = Value::boolean(a[0].i == a[1].i);
        break;
      case Op::EqY:
        if (!kinds(a, {K::TY, K::TY})) return mismatch();
        out = Value::boolean(a[0].i == a[1].i);
        break;
      case Op::GtX:
        if (!kinds(a, {K::TX, K::TX})) return mismatch();
        out = Value::boolean(a[0].i > a[1].i);
        break;
      case Op::GtY:
        if (!kinds(a, {K::TY, K::TY})) return mismatch();
        out = Value::boolean(a[0].i > a[1].i);
        break;
      case Op::Constant:
      case Op::If:
      case Op::Abstraction:
        return fail(EvalErrorCode::TypeMismatch, p.name + ": not a builtin function");
    }
    if (tracer_) tracer_->end_call(handle, out);
    return true;
  }

  const GridState& state_;
  Tracer* tracer_;
};

}  // namespace

std::optional<Value> evaluate_program(const TermPtr& program, const GridState& state,
                                      EvalError* error, Tracer* tracer) {
  Machine m(state, tracer);
  std::vector<Value> env;
  int params = lambda_count(*program);
  auto report = [&](EvalErrorCode code, std::string msg) -> std::optional<Value> {
    if (error) *error = EvalError{code, std::move(msg)};
    return std::nullopt;
  };
  if (params > 2) return report(EvalErrorCode::TypeMismatch, "program takes more than two arguments");
  if (params >= 1) env.push_back(Value::grid(&state));
  if (params == 2) {
    if (!state.direction) {
      return report(EvalErrorCode::TypeMismatch, "program expects a direction but the state has none");
    }
    env.push_back(Value::direction(*state.direction));
  }
  Value out;
  if (!m.eval(*strip_lambdas(program, params), env, out)) {
    if (error) *error = m.error;
    return std::nullopt;
  }
  return out;
}

std::optional<Action> try_exec(const TermPtr& program, const GridState& state) {
  auto v = evaluate_program(program, state);
  if (!v || v->kind != ValueKind::Action) return std::nullopt;
  return static_cast<Action>(v->i);
}

}  // namespace gridsynth
