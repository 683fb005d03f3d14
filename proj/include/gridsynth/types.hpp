#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsynth {

enum class BaseType : std::uint8_t {
  Action,
  Int,
  Map,
  Direction,
  Object,
  MapObject,
  Bool,
  TX,
  TY,
};
inline constexpr int kNumBaseTypes = 9;

std::string_view base_type_name(BaseType b);
std::optional<BaseType> base_type_from_name(std::string_view name);

/// Simple types of the DSL: base types, right-associated arrows and type
/// variables (only used by the polymorphic `if` and by abstractions built
/// around it).
class Type {
 public:
  enum class Kind : std::uint8_t { Base, Arrow, Var };

  Type() : Type(base(BaseType::Action)) {}

  static Type base(BaseType b);
  static Type arrow(Type from, Type to);
  static Type var(int id);
  /// a -> b -> ... -> result
  static Type function(const std::vector<Type>& args, Type result);

  Kind kind() const { return node_->kind; }
  bool is_base() const { return kind() == Kind::Base; }
  bool is_arrow() const { return kind() == Kind::Arrow; }
  bool is_var() const { return kind() == Kind::Var; }
  BaseType base_type() const { return node_->base; }
  const Type& from() const { return node_->args[0]; }
  const Type& to() const { return node_->args[1]; }
  int var_id() const { return node_->var; }

  /// Argument types of a curried function type, outermost first.
  std::vector<Type> arguments() const;
  /// Type left after stripping every arrow.
  Type result() const;
  int arity() const;
  bool is_ground() const;

  std::string str() const;

  friend bool operator==(const Type& a, const Type& b);
  friend bool operator!=(const Type& a, const Type& b) { return !(a == b); }

 private:
  struct Node {
    Kind kind;
    BaseType base = BaseType::Action;
    int var = 0;
    std::vector<Type> args;
  };
  explicit Type(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Parses "map -> direction -> action" style strings (also accepts the
/// unicode arrow and parenthesised sub-types; type variables are t0, t1, ...).
Type parse_type(std::string_view text);

/// Triangular substitution used by unification.
class Substitution {
 public:
  Type apply(const Type& t) const;
  /// Returns false (leaving the substitution possibly extended) on clash.
  bool unify(const Type& a, const Type& b);
  int fresh() { return next_++; }
  void reserve_above(int id) {
    if (id >= next_) next_ = id + 1;
  }
  /// Renames the variables of `t` to fresh ones.
  Type instantiate(const Type& t);

 private:
  bool occurs(int id, const Type& t) const;
  std::map<int, Type> bindings_;
  int next_ = 1000;
};

/// Renames type variables to t0, t1, ... in order of first appearance.
Type canonicalize(const Type& t);

}  // namespace gridsynth
