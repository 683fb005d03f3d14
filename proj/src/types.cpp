#include "gridsynth/types.hpp"

#include <array>
#include <cctype>

#include "gridsynth/errors.hpp"

namespace gridsynth {

namespace {

constexpr std::array<std::string_view, kNumBaseTypes> kBaseNames = {
    "action", "int", "map", "direction", "object", "mapObject", "bool", "tx", "ty"};

}  // namespace

std::string_view base_type_name(BaseType b) {
  return kBaseNames[static_cast<int>(b)];
}

std::optional<BaseType> base_type_from_name(std::string_view name) {
  for (int i = 0; i < kNumBaseTypes; ++i) {
    if (kBaseNames[i] == name) return static_cast<BaseType>(i);
  }
  return std::nullopt;
}

Type Type::base(BaseType b) {
  // Base types are interned; there are only nine of them.
  static const std::array<std::shared_ptr<const Node>, kNumBaseTypes> nodes = [] {
    std::array<std::shared_ptr<const Node>, kNumBaseTypes> out;
    for (int i = 0; i < kNumBaseTypes; ++i) {
      out[i] = std::make_shared<const Node>(Node{Kind::Base, static_cast<BaseType>(i), 0, {}});
    }
    return out;
  }();
  return Type(nodes[static_cast<int>(b)]);
}

Type Type::arrow(Type from, Type to) {
  return Type(std::make_shared<const Node>(
      Node{Kind::Arrow, BaseType::Action, 0, {std::move(from), std::move(to)}}));
}

Type Type::var(int id) {
  return Type(std::make_shared<const Node>(Node{Kind::Var, BaseType::Action, id, {}}));
}

Type Type::function(const std::vector<Type>& args, Type result) {
  Type t = std::move(result);
  for (auto it = args.rbegin(); it != args.rend(); ++it) t = arrow(*it, t);
  return t;
}

std::vector<Type> Type::arguments() const {
  std::vector<Type> out;
  const Type* t = this;
  while (t->is_arrow()) {
    out.push_back(t->from());
    t = &t->to();
  }
  return out;
}

Type Type::result() const {
  const Type* t = this;
  while (t->is_arrow()) t = &t->to();
  return *t;
}

int Type::arity() const {
  int n = 0;
  const Type* t = this;
  while (t->is_arrow()) {
    ++n;
    t = &t->to();
  }
  return n;
}

bool Type::is_ground() const {
  switch (kind()) {
    case Kind::Base:
      return true;
    case Kind::Var:
      return false;
    case Kind::Arrow:
      return from().is_ground() && to().is_ground();
  }
  return false;
}

std::string Type::str() const {
  switch (kind()) {
    case Kind::Base:
      return std::string(base_type_name(base_type()));
    case Kind::Var:
      return "t" + std::to_string(var_id());
    case Kind::Arrow: {
      std::string lhs = from().str();
      if (from().is_arrow()) lhs = "(" + lhs + ")";
      return lhs + " -> " + to().str();
    }
  }
  return "?";
}

bool operator==(const Type& a, const Type& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Type::Kind::Base:
      return a.base_type() == b.base_type();
    case Type::Kind::Var:
      return a.var_id() == b.var_id();
    case Type::Kind::Arrow:
      return a.from() == b.from() && a.to() == b.to();
  }
  return false;
}

namespace {

class TypeParser {
 public:
  explicit TypeParser(std::string_view text) : text_(text) {}

  Type parse() {
    Type t = parse_arrow();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return t;
  }

 private:
  Type parse_arrow() {
    Type lhs = parse_atom();
    skip_ws();
    if (consume("->") || consume("\xE2\x86\x92")) {
      return Type::arrow(lhs, parse_arrow());
    }
    return lhs;
  }

  Type parse_atom() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      Type t = parse_arrow();
      skip_ws();
      if (!consume(")")) fail("expected ')'");
      return t;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_')) {
      ++pos_;
    }
    std::string_view word = text_.substr(start, pos_ - start);
    if (word.empty()) fail("expected a type name");
    if (auto b = base_type_from_name(word)) return Type::base(*b);
    if (word.size() > 1 && word[0] == 't' &&
        std::isdigit(static_cast<unsigned char>(word[1]))) {
      return Type::var(std::stoi(std::string(word.substr(1))));
    }
    fail("unknown type '" + std::string(word) + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(std::string_view tok) {
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError("type '" + std::string(text_) + "': " + msg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Type parse_type(std::string_view text) { return TypeParser(text).parse(); }

Type Substitution::apply(const Type& t) const {
  switch (t.kind()) {
    case Type::Kind::Base:
      return t;
    case Type::Kind::Var: {
      auto it = bindings_.find(t.var_id());
      if (it == bindings_.end()) return t;
      return apply(it->second);
    }
    case Type::Kind::Arrow: {
      Type f = apply(t.from());
      Type r = apply(t.to());
      if (f == t.from() && r == t.to()) return t;
      return Type::arrow(f, r);
    }
  }
  return t;
}

bool Substitution::occurs(int id, const Type& t) const {
  Type r = apply(t);
  switch (r.kind()) {
    case Type::Kind::Base:
      return false;
    case Type::Kind::Var:
      return r.var_id() == id;
    case Type::Kind::Arrow:
      return occurs(id, r.from()) || occurs(id, r.to());
  }
  return false;
}

bool Substitution::unify(const Type& a0, const Type& b0) {
  Type a = apply(a0);
  Type b = apply(b0);
  if (a.is_var()) {
    if (b.is_var() && b.var_id() == a.var_id()) return true;
    if (occurs(a.var_id(), b)) return false;
    bindings_[a.var_id()] = b;
    return true;
  }
  if (b.is_var()) return unify(b, a);
  if (a.kind() != b.kind()) return false;
  if (a.is_base()) return a.base_type() == b.base_type();
  return unify(a.from(), b.from()) && unify(a.to(), b.to());
}

Type Substitution::instantiate(const Type& t) {
  std::map<int, Type> renaming;
  auto go = [&](auto&& self, const Type& u) -> Type {
    switch (u.kind()) {
      case Type::Kind::Base:
        return u;
      case Type::Kind::Var: {
        auto it = renaming.find(u.var_id());
        if (it != renaming.end()) return it->second;
        Type fresh_var = Type::var(fresh());
        renaming.emplace(u.var_id(), fresh_var);
        return fresh_var;
      }
      case Type::Kind::Arrow:
        return Type::arrow(self(self, u.from()), self(self, u.to()));
    }
    return u;
  };
  return go(go, t);
}

Type canonicalize(const Type& t) {
  std::map<int, int> renaming;
  auto go = [&](auto&& self, const Type& u) -> Type {
    switch (u.kind()) {
      case Type::Kind::Base:
        return u;
      case Type::Kind::Var: {
        auto [it, inserted] = renaming.emplace(u.var_id(), static_cast<int>(renaming.size()));
        return Type::var(it->second);
      }
      case Type::Kind::Arrow:
        return Type::arrow(self(self, u.from()), self(self, u.to()));
    }
    return u;
  };
  return go(go, t);
}

}  // namespace gridsynth
