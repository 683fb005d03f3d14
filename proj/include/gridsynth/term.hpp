#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gridsynth/grid.hpp"
#include "gridsynth/types.hpp"

namespace gridsynth {

class Term;
using TermPtr = std::shared_ptr<const Term>;
struct Primitive;
using PrimitivePtr = std::shared_ptr<const Primitive>;
struct FunctionValue;

enum class ValueKind : std::uint8_t {
  Action,
  Int,
  Map,
  Direction,
  Object,
  MapObject,
  Bool,
  TX,
  TY,
  Function,
};

/// Runtime value. Scalars live in `i` (action id, integer, direction, object
/// code, boolean, coordinate); a MapObject also carries its cell in x/y.
struct Value {
  ValueKind kind = ValueKind::Bool;
  int i = 0;
  int x = 0;
  int y = 0;
  const GridState* map = nullptr;
  std::shared_ptr<const FunctionValue> fn;

  static Value make(ValueKind k, int i, int x = 0, int y = 0) {
    Value v;
    v.kind = k;
    v.i = i;
    v.x = x;
    v.y = y;
    return v;
  }
  static Value action(Action a) { return make(ValueKind::Action, static_cast<int>(a)); }
  static Value integer(int v) { return make(ValueKind::Int, v); }
  static Value direction(int d) { return make(ValueKind::Direction, d); }
  static Value object(int code) { return make(ValueKind::Object, code); }
  static Value map_object(int code, int x, int y) { return make(ValueKind::MapObject, code, x, y); }
  static Value boolean(bool b) { return make(ValueKind::Bool, b ? 1 : 0); }
  static Value tx(int v) { return make(ValueKind::TX, v); }
  static Value ty(int v) { return make(ValueKind::TY, v); }
  static Value grid(const GridState* g) {
    Value v = make(ValueKind::Map, 0);
    v.map = g;
    return v;
  }

  /// Human readable rendering used in traces ("wall-obj@(1,0)", "true", ...).
  std::string str() const;
};

bool operator==(const Value& a, const Value& b);

enum class Op : std::uint8_t {
  Constant,
  If,
  And,
  Or,
  Not,
  EqDirection,
  EqObj,
  Get,
  GetGameObj,
  GetX,
  GetY,
  EqX,
  EqY,
  GtX,
  GtY,
  Abstraction,
};

/// A DSL primitive or a learned abstraction. Abstractions carry a closed body
/// of the form λ^arity. pattern.
struct Primitive {
  std::string name;
  Type type;
  Op op = Op::Constant;
  int arity = 0;
  Value value;   // Op::Constant only
  TermPtr body;  // Op::Abstraction only

  bool is_abstraction() const { return op == Op::Abstraction; }
};

/// Immutable de Bruijn lambda term.
class Term {
 public:
  enum class Kind : std::uint8_t { Prim, Var, Lambda, Apply };

  static TermPtr prim(PrimitivePtr p);
  static TermPtr var(int index);
  static TermPtr lambda(TermPtr body);
  static TermPtr apply(TermPtr fn, TermPtr arg);
  static TermPtr apply_all(TermPtr head, const std::vector<TermPtr>& args);

  Kind kind() const { return kind_; }
  bool is_prim() const { return kind_ == Kind::Prim; }
  bool is_var() const { return kind_ == Kind::Var; }
  bool is_lambda() const { return kind_ == Kind::Lambda; }
  bool is_apply() const { return kind_ == Kind::Apply; }

  const Primitive& primitive() const { return *prim_; }
  const PrimitivePtr& primitive_ptr() const { return prim_; }
  int index() const { return index_; }
  const TermPtr& body() const { return a_; }
  const TermPtr& fn() const { return a_; }
  const TermPtr& arg() const { return b_; }

  std::size_t hash() const { return hash_; }
  /// Root-to-leaf node count; an application spine counts as one node.
  int depth() const { return depth_; }
  int size() const { return size_; }
  /// Smallest de Bruijn index escaping this term plus one (0 when closed).
  int free_bound() const { return free_bound_; }

  /// Head and arguments of an application spine (head is the term itself
  /// for non-applications).
  const Term* spine(std::vector<const Term*>* args) const;

  Term(Kind k, PrimitivePtr p, int index, TermPtr a, TermPtr b);

 private:
  Kind kind_;
  PrimitivePtr prim_;
  int index_ = 0;
  TermPtr a_;
  TermPtr b_;
  std::size_t hash_ = 0;
  int depth_ = 1;
  int size_ = 1;
  int free_bound_ = 0;
};

/// Structural equality; with de Bruijn indices this is α-equivalence.
bool terms_equal(const Term& a, const Term& b);
inline bool terms_equal(const TermPtr& a, const TermPtr& b) { return terms_equal(*a, *b); }

struct TermPtrHash {
  std::size_t operator()(const TermPtr& t) const { return t->hash(); }
};
struct TermPtrEq {
  bool operator()(const TermPtr& a, const TermPtr& b) const { return terms_equal(*a, *b); }
};

/// Number of leading lambdas.
int lambda_count(const Term& t);
/// Body under the leading `n` lambdas.
TermPtr strip_lambdas(TermPtr t, int n);

/// Shifts free indices >= cutoff by `by`.
TermPtr shift(const TermPtr& t, int by, int cutoff = 0);
/// Replaces Var(index) with `value` (adjusting indices as the binder for
/// `index` disappears).
TermPtr substitute(const TermPtr& t, int index, const TermPtr& value);
/// Normal-order β-normalisation.
TermPtr beta_normalize(const TermPtr& t);

/// The primitive table of one environment plus any learned abstractions.
class PrimTable {
 public:
  PrimTable() = default;
  PrimTable(EnvTag env, std::vector<PrimitivePtr> prims);

  EnvTag env() const { return env_; }
  const std::vector<PrimitivePtr>& primitives() const { return prims_; }
  std::size_t size() const { return prims_.size(); }
  /// nullptr when absent.
  PrimitivePtr find(std::string_view name) const;
  /// Throws UnknownPrimitive.
  const PrimitivePtr& at(std::string_view name) const;
  int index_of(std::string_view name) const;

  PrimTable with(PrimitivePtr extra) const;
  std::vector<PrimitivePtr> abstractions() const;

 private:
  EnvTag env_ = EnvTag::Maze;
  std::vector<PrimitivePtr> prims_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace gridsynth
