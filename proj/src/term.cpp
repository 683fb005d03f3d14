#include "gridsynth/term.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include "gridsynth/errors.hpp"

namespace gridsynth {

namespace {

constexpr std::array<std::string_view, 3> kEnvNames = {"maze", "asterix", "spaceinvaders"};
constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "left", "right", "forward", "up", "down", "fire", "no-op"};

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace

std::string_view env_name(EnvTag env) { return kEnvNames[static_cast<int>(env)]; }

EnvTag env_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kEnvNames.size(); ++i) {
    if (kEnvNames[i] == name) return static_cast<EnvTag>(i);
  }
  throw FormatError("unknown environment '" + std::string(name) + "'");
}

std::string_view action_name(Action a) { return kActionNames[static_cast<int>(a)]; }

std::optional<Action> action_from_name(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i) {
    if (kActionNames[i] == name) return static_cast<Action>(i);
  }
  return std::nullopt;
}

std::string Value::str() const {
  switch (kind) {
    case ValueKind::Action:
      return std::string(action_name(static_cast<Action>(i)));
    case ValueKind::Int:
      return std::to_string(i);
    case ValueKind::Map:
      return "map";
    case ValueKind::Direction:
      return "direction-" + std::to_string(i);
    case ValueKind::Object:
      return "obj:" + std::to_string(i);
    case ValueKind::MapObject:
      return "obj:" + std::to_string(i) + "@(" + std::to_string(x) + "," + std::to_string(y) + ")";
    case ValueKind::Bool:
      return i ? "true" : "false";
    case ValueKind::TX:
      return "x=" + std::to_string(i);
    case ValueKind::TY:
      return "y=" + std::to_string(i);
    case ValueKind::Function:
      return "<function>";
  }
  return "?";
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ValueKind::MapObject:
      return a.i == b.i && a.x == b.x && a.y == b.y;
    case ValueKind::Map:
      return a.map == b.map || (a.map && b.map && *a.map == *b.map);
    case ValueKind::Function:
      return a.fn == b.fn;
    default:
      return a.i == b.i;
  }
}

Term::Term(Kind k, PrimitivePtr p, int index, TermPtr a, TermPtr b)
    : kind_(k), prim_(std::move(p)), index_(index), a_(std::move(a)), b_(std::move(b)) {
  switch (kind_) {
    case Kind::Prim:
      hash_ = mix(0x51ed27, std::hash<std::string>{}(prim_->name));
      break;
    case Kind::Var:
      hash_ = mix(0x7a3, static_cast<std::size_t>(index_));
      free_bound_ = index_ + 1;
      break;
    case Kind::Lambda:
      hash_ = mix(0x1a4bd, a_->hash_);
      depth_ = 1 + a_->depth_;
      size_ = 1 + a_->size_;
      free_bound_ = std::max(0, a_->free_bound_ - 1);
      break;
    case Kind::Apply:
      hash_ = mix(mix(0xa991, a_->hash_), b_->hash_);
      depth_ = std::max(a_->depth_, 1 + b_->depth_);
      size_ = 1 + a_->size_ + b_->size_;
      free_bound_ = std::max(a_->free_bound_, b_->free_bound_);
      break;
  }
}

TermPtr Term::prim(PrimitivePtr p) {
  return std::make_shared<const Term>(Kind::Prim, std::move(p), 0, nullptr, nullptr);
}

TermPtr Term::var(int index) {
  return std::make_shared<const Term>(Kind::Var, nullptr, index, nullptr, nullptr);
}

TermPtr Term::lambda(TermPtr body) {
  return std::make_shared<const Term>(Kind::Lambda, nullptr, 0, std::move(body), nullptr);
}

TermPtr Term::apply(TermPtr fn, TermPtr arg) {
  return std::make_shared<const Term>(Kind::Apply, nullptr, 0, std::move(fn), std::move(arg));
}

TermPtr Term::apply_all(TermPtr head, const std::vector<TermPtr>& args) {
  for (const auto& a : args) head = apply(std::move(head), a);
  return head;
}

const Term* Term::spine(std::vector<const Term*>* args) const {
  const Term* t = this;
  if (args) args->clear();
  while (t->is_apply()) {
    if (args) args->push_back(t->arg().get());
    t = t->fn().get();
  }
  if (args) std::reverse(args->begin(), args->end());
  return t;
}

bool terms_equal(const Term& a, const Term& b) {
  if (&a == &b) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind() || a.size() != b.size()) return false;
  switch (a.kind()) {
    case Term::Kind::Prim:
      return a.primitive_ptr() == b.primitive_ptr() || a.primitive().name == b.primitive().name;
    case Term::Kind::Var:
      return a.index() == b.index();
    case Term::Kind::Lambda:
      return terms_equal(*a.body(), *b.body());
    case Term::Kind::Apply:
      return terms_equal(*a.fn(), *b.fn()) && terms_equal(*a.arg(), *b.arg());
  }
  return false;
}

int lambda_count(const Term& t) {
  int n = 0;
  const Term* cur = &t;
  while (cur->is_lambda()) {
    ++n;
    cur = cur->body().get();
  }
  return n;
}

TermPtr strip_lambdas(TermPtr t, int n) {
  for (int i = 0; i < n && t->is_lambda(); ++i) t = t->body();
  return t;
}

TermPtr shift(const TermPtr& t, int by, int cutoff) {
  if (by == 0 || t->free_bound() <= cutoff) return t;
  switch (t->kind()) {
    case Term::Kind::Prim:
      return t;
    case Term::Kind::Var:
      return t->index() >= cutoff ? Term::var(t->index() + by) : t;
    case Term::Kind::Lambda:
      return Term::lambda(shift(t->body(), by, cutoff + 1));
    case Term::Kind::Apply:
      return Term::apply(shift(t->fn(), by, cutoff), shift(t->arg(), by, cutoff));
  }
  return t;
}

namespace {

TermPtr subst_at(const TermPtr& t, int index, const TermPtr& value, int depth) {
  if (t->free_bound() <= index) return t;
  switch (t->kind()) {
    case Term::Kind::Prim:
      return t;
    case Term::Kind::Var:
      if (t->index() == index) return shift(value, depth);
      if (t->index() > index) return Term::var(t->index() - 1);
      return t;
    case Term::Kind::Lambda:
      return Term::lambda(subst_at(t->body(), index + 1, value, depth + 1));
    case Term::Kind::Apply:
      return Term::apply(subst_at(t->fn(), index, value, depth),
                         subst_at(t->arg(), index, value, depth));
  }
  return t;
}

}  // namespace

TermPtr substitute(const TermPtr& t, int index, const TermPtr& value) {
  return subst_at(t, index, value, 0);
}

TermPtr beta_normalize(const TermPtr& t) {
  switch (t->kind()) {
    case Term::Kind::Prim:
    case Term::Kind::Var:
      return t;
    case Term::Kind::Lambda: {
      TermPtr body = beta_normalize(t->body());
      return body == t->body() ? t : Term::lambda(body);
    }
    case Term::Kind::Apply: {
      TermPtr fn = beta_normalize(t->fn());
      if (fn->is_lambda()) {
        return beta_normalize(substitute(fn->body(), 0, t->arg()));
      }
      TermPtr arg = beta_normalize(t->arg());
      if (fn == t->fn() && arg == t->arg()) return t;
      return Term::apply(fn, arg);
    }
  }
  return t;
}

PrimTable::PrimTable(EnvTag env, std::vector<PrimitivePtr> prims)
    : env_(env), prims_(std::move(prims)) {
  for (std::size_t i = 0; i < prims_.size(); ++i) {
    index_.emplace(prims_[i]->name, static_cast<int>(i));
  }
}

PrimitivePtr PrimTable::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : prims_[it->second];
}

const PrimitivePtr& PrimTable::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw UnknownPrimitive("'" + std::string(name) + "'");
  return prims_[it->second];
}

int PrimTable::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? -1 : it->second;
}

PrimTable PrimTable::with(PrimitivePtr extra) const {
  std::vector<PrimitivePtr> prims = prims_;
  prims.push_back(std::move(extra));
  return PrimTable(env_, std::move(prims));
}

std::vector<PrimitivePtr> PrimTable::abstractions() const {
  std::vector<PrimitivePtr> out;
  for (const auto& p : prims_) {
    if (p->is_abstraction()) out.push_back(p);
  }
  return out;
}

}  // namespace gridsynth
