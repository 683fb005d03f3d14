#include "gridsynth/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/rng.hpp"

namespace gridsynth {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

RequestShape request_shape(const Type& request) {
  RequestShape shape;
  Type t = request;
  while (t.is_arrow()) {
    if (!t.from().is_base()) {
      throw TypeMismatch("base parameter type", t.from().str(), "request " + request.str());
    }
    shape.params.push_back(t.from().base_type());
    t = t.to();
  }
  if (!t.is_base()) throw TypeMismatch("base result type", t.str(), "request " + request.str());
  shape.result = t.base_type();
  return shape;
}

// ---------------------------------------------------------------------------
// ChoiceTable

ChoiceTable::ChoiceTable(const Grammar& grammar, std::vector<BaseType> env) : env_(std::move(env)) {
  const auto& prims = grammar.table().primitives();
  prim_terms_.reserve(prims.size());
  for (const auto& p : prims) prim_terms_.push_back(Term::prim(p));

  for (int ti = 0; ti < kNumBaseTypes; ++ti) {
    const auto t = static_cast<BaseType>(ti);
    auto& out = choices_[ti];
    for (const auto& cand : grammar.candidates(t)) {
      Choice c;
      c.kind = Choice::Kind::Production;
      c.index = cand.production;
      c.logp = grammar.log_weights()[cand.production];
      c.args = cand.args;
      out.push_back(std::move(c));
    }
    std::vector<int> matching;
    for (int i = 0; i < static_cast<int>(env_.size()); ++i) {
      if (env_[env_.size() - 1 - i] == t) matching.push_back(i);
    }
    for (int i : matching) {
      Choice c;
      c.kind = Choice::Kind::Variable;
      c.index = i;
      c.logp = grammar.log_variable() - std::log(static_cast<double>(matching.size()));
      out.push_back(std::move(c));
    }
    std::vector<double> ls;
    ls.reserve(out.size());
    for (const auto& c : out) ls.push_back(c.logp);
    const double z = log_sum_exp(ls);
    for (auto& c : out) c.logp -= z;
  }

  min_depth_.fill(kUnreachable);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int ti = 0; ti < kNumBaseTypes; ++ti) {
      for (const auto& c : choices_[ti]) {
        int d = 1;
        for (BaseType a : c.args) d = std::max(d, 1 + min_depth_[static_cast<int>(a)]);
        if (d < min_depth_[ti]) {
          min_depth_[ti] = d;
          changed = true;
        }
      }
    }
  }
  for (auto& cs : choices_) {
    for (auto& c : cs) {
      int d = 1;
      for (BaseType a : c.args) d = std::max(d, 1 + min_depth_[static_cast<int>(a)]);
      c.min_depth = std::min(d, kUnreachable);
    }
  }
}

int ChoiceTable::find_production(BaseType t, int production) const {
  const auto& cs = at(t);
  for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
    if (cs[i].kind == Choice::Kind::Production && cs[i].index == production) return i;
  }
  return -1;
}

int ChoiceTable::find_variable(BaseType t, int de_bruijn) const {
  const auto& cs = at(t);
  for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
    if (cs[i].kind == Choice::Kind::Variable && cs[i].index == de_bruijn) return i;
  }
  return -1;
}

TermPtr ChoiceTable::head(const Choice& c) const {
  if (c.kind == Choice::Kind::Variable) return Term::var(c.index);
  return prim_terms_[c.index];
}

// ---------------------------------------------------------------------------
// Grammar

Grammar::Grammar(PrimTable table, std::vector<double> log_weights, double log_variable)
    : table_(std::move(table)), weights_(std::move(log_weights)), log_variable_(log_variable) {
  if (weights_.size() != table_.size()) {
    throw FormatError("grammar has " + std::to_string(weights_.size()) + " weights for " +
                      std::to_string(table_.size()) + " productions");
  }
  build_candidates();
}

Grammar Grammar::uniform(PrimTable table) {
  std::vector<double> w(table.size(), 0.0);
  return Grammar(std::move(table), std::move(w), 0.0);
}

Type Grammar::request() const { return request_type(env()); }

Grammar Grammar::with_production(PrimitivePtr p, double log_weight) const {
  std::vector<double> w = weights_;
  w.push_back(log_weight);
  return Grammar(table_.with(std::move(p)), std::move(w), log_variable_);
}

void Grammar::build_candidates() {
  const auto& prims = table_.primitives();
  for (int ti = 0; ti < kNumBaseTypes; ++ti) {
    const auto t = static_cast<BaseType>(ti);
    for (int pi = 0; pi < static_cast<int>(prims.size()); ++pi) {
      Substitution s;
      const Type inst = s.instantiate(prims[pi]->type);
      if (!s.unify(inst.result(), Type::base(t))) continue;
      Candidate cand{pi, {}};
      bool ok = true;
      for (const auto& a : inst.arguments()) {
        const Type g = s.apply(a);
        if (!g.is_base()) {
          ok = false;
          break;
        }
        cand.args.push_back(g.base_type());
      }
      if (ok) candidates_[ti].push_back(std::move(cand));
    }
  }
}

std::shared_ptr<const ChoiceTable> Grammar::choices(const std::vector<BaseType>& env) const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  for (const auto& [key, table] : cache_->tables) {
    if (key == env) return table;
  }
  auto table = std::make_shared<const ChoiceTable>(*this, env);
  cache_->tables.emplace_back(env, table);
  return table;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

struct NodeBudgetExceeded {};

struct Sampler {
  const ChoiceTable& table;
  Rng& rng;
  int nodes_left = 0;

  TermPtr draw(BaseType t, int depth_left) {
    if (--nodes_left < 0) throw NodeBudgetExceeded{};
    const auto& cs = table.at(t);
    double total = 0.0;
    for (const auto& c : cs) {
      if (c.min_depth <= depth_left) total += std::exp(c.logp);
    }
    if (total <= 0.0) {
      throw DepthUnsatisfiable("no " + std::string(base_type_name(t)) + " term fits depth " +
                               std::to_string(depth_left));
    }
    double u = rng.uniform() * total;
    const Choice* pick = nullptr;
    for (const auto& c : cs) {
      if (c.min_depth > depth_left) continue;
      pick = &c;
      u -= std::exp(c.logp);
      if (u < 0.0) break;
    }
    std::vector<TermPtr> args;
    args.reserve(pick->args.size());
    for (BaseType a : pick->args) args.push_back(draw(a, depth_left - 1));
    return Term::apply_all(table.head(*pick), args);
  }
};

}  // namespace

TermPtr sample_program(const Grammar& g, const SampleConfig& cfg) {
  const RequestShape shape = request_shape(cfg.request);
  const int body_depth = cfg.max_depth - static_cast<int>(shape.params.size());
  const auto table = g.choices(shape.params);
  if (body_depth < table->min_depth(shape.result)) {
    throw DepthUnsatisfiable("request " + cfg.request.str() + " needs depth >= " +
                             std::to_string(table->min_depth(shape.result) + shape.params.size()) +
                             ", got " + std::to_string(cfg.max_depth));
  }
  constexpr int kMaxAttempts = 1000;
  Rng rng(cfg.seed);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Sampler sampler{*table, rng, cfg.max_nodes};
    TermPtr body;
    try {
      body = sampler.draw(shape.result, body_depth);
    } catch (const NodeBudgetExceeded&) {
      continue;
    }
    for (std::size_t i = 0; i < shape.params.size(); ++i) body = Term::lambda(body);
    return body;
  }
  throw DepthUnsatisfiable("no " + cfg.request.str() + " program within " + std::to_string(cfg.max_nodes) +
                           " nodes after " + std::to_string(kMaxAttempts) + " attempts");
}

// ---------------------------------------------------------------------------
// Description length and usage counting

namespace {

/// Walks the derivation of `t`, reporting each choice to `visit`.
template <typename Visit>
void walk_derivation(const Grammar& g, const TermPtr& t, const Type& request, Visit&& visit) {
  RequestShape shape;
  try {
    shape = request_shape(request);
  } catch (const TypeMismatch& e) {
    throw NotDerivable(e.what());
  }
  TermPtr body = t;
  for (std::size_t i = 0; i < shape.params.size(); ++i) {
    if (!body->is_lambda()) {
      throw NotDerivable("expected a lambda for request " + request.str() + " in " +
                         print_program(t));
    }
    body = body->body();
  }
  const auto table = g.choices(shape.params);

  struct Rec {
    const ChoiceTable& table;
    const TermPtr& root;
    Visit& visit;
    void operator()(const Term& node, BaseType want) {
      std::vector<const Term*> args;
      const Term* head = node.spine(&args);
      int pos = -1;
      if (head->is_prim()) {
        const int prod = table_index(head->primitive().name);
        if (prod >= 0) pos = table.find_production(want, prod);
      } else if (head->is_var()) {
        pos = table.find_variable(want, head->index());
      }
      if (pos < 0) {
        throw NotDerivable("no " + std::string(base_type_name(want)) + " production for `" +
                           head_text(*head) + "` in " + print_program(root));
      }
      const Choice& c = table.at(want)[pos];
      if (c.args.size() != args.size()) {
        throw NotDerivable("`" + head_text(*head) + "` expects " +
                           std::to_string(c.args.size()) + " arguments in " +
                           print_program(root));
      }
      visit(c);
      for (std::size_t i = 0; i < args.size(); ++i) (*this)(*args[i], c.args[i]);
    }
    int table_index(const std::string& name) const { return prims->index_of(name); }
    static std::string head_text(const Term& h) {
      if (h.is_prim()) return h.primitive().name;
      if (h.is_var()) return "$" + std::to_string(h.index());
      return "lambda";
    }
    const PrimTable* prims;
  };
  Rec rec{*table, t, visit, &g.table()};
  rec(*body, shape.result);
}

/// The principal type of `t`, with parameters it leaves unconstrained taken
/// from the leading parameters of the environment request.
Type resolve_request(const Grammar& g, const TermPtr& t, const std::optional<Type>& request) {
  if (request) return *request;
  Type principal;
  try {
    principal = infer_type(t);
  } catch (const Error& e) {
    throw NotDerivable(e.what());
  }
  if (principal.is_ground()) return principal;
  const std::vector<Type> env_params = g.request().arguments();
  const std::vector<Type> params = principal.arguments();
  if (params.size() <= env_params.size()) {
    std::vector<Type> prefix(env_params.begin(), env_params.begin() + static_cast<long>(params.size()));
    Substitution sub;
    for (const Type& p : params) sub.reserve_above(p.is_var() ? p.var_id() : 0);
    if (sub.unify(principal, Type::function(prefix, principal.result()))) {
      const Type resolved = sub.apply(principal);
      if (resolved.is_ground()) return resolved;
    }
  }
  throw NotDerivable("principal type " + principal.str() + " is not ground");
}

}  // namespace

double description_length(const Grammar& g, const TermPtr& t, std::optional<Type> request) {
  const Type req = resolve_request(g, t, request);
  double dl = 0.0;
  walk_derivation(g, t, req, [&](const Choice& c) { dl -= c.logp; });
  return dl;
}

Grammar refit(const Grammar& g, std::span<const TermPtr> solved) {
  std::vector<double> uses(g.table().size(), 0.0);
  double var_uses = 0.0;
  for (const auto& t : solved) {
    const Type req = g.request();
    walk_derivation(g, t, req, [&](const Choice& c) {
      if (c.kind == Choice::Kind::Variable) {
        var_uses += 1.0;
      } else {
        uses[c.index] += 1.0;
      }
    });
  }
  std::vector<double> w(uses.size());
  for (std::size_t i = 0; i < uses.size(); ++i) w[i] = std::log(uses[i] + 1.0);
  return Grammar(g.table(), std::move(w), std::log(var_uses + 1.0));
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json grammar_to_json(const Grammar& g) {
  nlohmann::json prods = nlohmann::json::array();
  const auto& prims = g.table().primitives();
  for (std::size_t i = 0; i < prims.size(); ++i) {
    prods.push_back({{"name", prims[i]->name},
                     {"type", prims[i]->type.str()},
                     {"logp", g.log_weights()[i]}});
  }
  return {{"version", kGrammarSchema},
          {"env", std::string(env_name(g.env()))},
          {"depthCountsBinders", true},
          {"logVariable", g.log_variable()},
          {"productions", prods}};
}

Grammar grammar_from_json(const nlohmann::json& doc, const PrimTable& table) {
  try {
    if (doc.at("version").get<std::string>() != kGrammarSchema) {
      throw FormatError("unsupported grammar version " + doc.at("version").dump());
    }
    if (env_from_name(doc.at("env").get<std::string>()) != table.env()) {
      throw FormatError("grammar environment does not match the primitive table");
    }
    std::vector<double> w(table.size(), 0.0);
    std::vector<bool> seen(table.size(), false);
    for (const auto& p : doc.at("productions")) {
      const std::string name = p.at("name").get<std::string>();
      const int idx = table.index_of(name);
      if (idx < 0) throw UnknownPrimitive(name);
      w[idx] = p.at("logp").get<double>();
      seen[idx] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) throw FormatError("grammar lacks production " + table.primitives()[i]->name);
    }
    return Grammar(table, std::move(w), doc.at("logVariable").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed grammar document: ") + e.what());
  }
}

}  // namespace gridsynth
