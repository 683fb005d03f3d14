#include "gridsynth/library.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/parallel.hpp"

namespace gridsynth {

namespace {

/// Temporary slot variables produced by anti-unification.
constexpr int kSlotBase = 1 << 20;

TermPtr spine_of(const TermPtr& t, std::vector<TermPtr>* args) {
  args->clear();
  TermPtr cur = t;
  while (cur->is_apply()) {
    args->push_back(cur->arg());
    cur = cur->fn();
  }
  std::reverse(args->begin(), args->end());
  return cur;
}

/// A non-leaf application spine together with the base type it fills.
struct Site {
  TermPtr term;
  BaseType type;
  int program;
};

void collect_sites(const TermPtr& t, BaseType want, int program, std::vector<Site>& out) {
  std::vector<TermPtr> args;
  const TermPtr head = spine_of(t, &args);
  if (args.empty() || !head->is_prim()) return;
  Substitution s;
  const Type inst = s.instantiate(head->primitive().type);
  if (!s.unify(inst.result(), Type::base(want))) return;
  const auto arg_types = inst.arguments();
  if (arg_types.size() != args.size()) return;
  out.push_back({t, want, program});
  for (std::size_t i = 0; i < args.size(); ++i) {
    const Type a = s.apply(arg_types[i]);
    if (a.is_base()) collect_sites(args[i], a.base_type(), program, out);
  }
}

std::vector<Site> corpus_sites(std::span<const TermPtr> corpus, const RequestShape& shape) {
  std::vector<Site> sites;
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    const TermPtr body = strip_lambdas(corpus[p], static_cast<int>(shape.params.size()));
    collect_sites(body, shape.result, static_cast<int>(p), sites);
  }
  return sites;
}

struct AntiUnifier {
  int max_arity;
  std::vector<std::pair<TermPtr, TermPtr>> slots;
  bool overflow = false;

  TermPtr run(const TermPtr& a, const TermPtr& b) {
    if (overflow) return nullptr;
    if (a->free_bound() == 0 && terms_equal(a, b)) return a;
    std::vector<TermPtr> aa;
    std::vector<TermPtr> ba;
    const TermPtr ha = spine_of(a, &aa);
    const TermPtr hb = spine_of(b, &ba);
    if (!aa.empty() && aa.size() == ba.size() && ha->is_prim() && hb->is_prim() &&
        ha->primitive().name == hb->primitive().name) {
      std::vector<TermPtr> args;
      for (std::size_t i = 0; i < aa.size(); ++i) {
        TermPtr r = run(aa[i], ba[i]);
        if (!r) return nullptr;
        args.push_back(std::move(r));
      }
      return Term::apply_all(ha, args);
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (terms_equal(slots[i].first, a) && terms_equal(slots[i].second, b)) {
        return Term::var(kSlotBase + static_cast<int>(i));
      }
    }
    if (static_cast<int>(slots.size()) >= max_arity) {
      overflow = true;
      return nullptr;
    }
    slots.emplace_back(a, b);
    return Term::var(kSlotBase + static_cast<int>(slots.size()) - 1);
  }
};

void slot_order(const Term& t, std::vector<int>& order) {
  if (t.is_var() && t.index() >= kSlotBase) {
    if (std::find(order.begin(), order.end(), t.index()) == order.end()) order.push_back(t.index());
  } else if (t.is_apply()) {
    slot_order(*t.fn(), order);
    slot_order(*t.arg(), order);
  }
}

TermPtr renumber(const TermPtr& t, const std::vector<int>& order) {
  if (t->is_var() && t->index() >= kSlotBase) {
    const int rank = static_cast<int>(std::find(order.begin(), order.end(), t->index()) - order.begin());
    return Term::var(static_cast<int>(order.size()) - 1 - rank);
  }
  if (t->is_apply()) return Term::apply(renumber(t->fn(), order), renumber(t->arg(), order));
  return t;
}

/// A proposal before naming: body, arity, the ground type it was found at,
/// and its canonical text.
struct Proposal {
  TermPtr body;
  int arity = 0;
  Type instance;
  std::string key;
  std::string head;
  int programs = 0;
};

std::optional<Proposal> finalize(const TermPtr& pattern, BaseType site_type) {
  if (pattern->is_var()) return std::nullopt;
  std::vector<int> order;
  slot_order(*pattern, order);
  const int k = static_cast<int>(order.size());
  std::vector<TermPtr> args;
  const TermPtr head = spine_of(pattern, &args);
  if (!head->is_prim()) return std::nullopt;
  if (static_cast<int>(args.size()) == k &&
      std::all_of(args.begin(), args.end(), [](const TermPtr& a) { return a->is_var(); })) {
    return std::nullopt;  // η-equivalent to the head itself
  }
  TermPtr body = renumber(pattern, order);
  for (int i = 0; i < k; ++i) body = Term::lambda(body);
  Type principal;
  try {
    principal = infer_type(body);
  } catch (const Error&) {
    return std::nullopt;
  }
  Substitution s;
  if (!s.unify(principal.result(), Type::base(site_type))) return std::nullopt;
  Type instance = s.apply(principal);
  if (!instance.is_ground()) return std::nullopt;
  Proposal p;
  p.body = body;
  p.arity = k;
  p.instance = instance;
  p.key = print_abstraction_body(body, k);
  p.head = head->primitive().name;
  return p;
}

bool match(const Term& pat, const TermPtr& t, std::vector<TermPtr>& binds, int k) {
  switch (pat.kind()) {
    case Term::Kind::Var: {
      const int slot = k - 1 - pat.index();
      if (binds[slot]) return terms_equal(binds[slot], t);
      binds[slot] = t;
      return true;
    }
    case Term::Kind::Prim:
      return t->is_prim() && t->primitive().name == pat.primitive().name;
    case Term::Kind::Apply:
      return t->is_apply() && match(*pat.fn(), t->fn(), binds, k) && match(*pat.arg(), t->arg(), binds, k);
    case Term::Kind::Lambda:
      return false;
  }
  return false;
}

std::vector<Proposal> propose(std::span<const TermPtr> corpus, const Type& request, int max_arity) {
  const RequestShape shape = request_shape(request);
  const std::vector<Site> sites = corpus_sites(corpus, shape);

  // Unique subterms per (head, argument count, type), with the programs
  // containing them.
  struct Unique {
    TermPtr term;
    BaseType type;
    std::set<int> programs;
  };
  std::map<std::string, std::vector<Unique>> groups;
  std::map<std::string, std::vector<std::size_t>> sites_by_head;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Site& s = sites[i];
    std::vector<TermPtr> args;
    const TermPtr head = spine_of(s.term, &args);
    const std::string head_name = head->primitive().name;
    sites_by_head[head_name].push_back(i);
    const std::string group = head_name + "/" + std::to_string(args.size()) + "/" +
                              std::string(base_type_name(s.type));
    auto& members = groups[group];
    auto it = std::find_if(members.begin(), members.end(),
                           [&](const Unique& u) { return terms_equal(u.term, s.term); });
    if (it == members.end()) {
      members.push_back({s.term, s.type, {s.program}});
    } else {
      it->programs.insert(s.program);
    }
  }

  std::map<std::string, Proposal> by_key;
  auto consider = [&](const TermPtr& a, const TermPtr& b, BaseType type) {
    AntiUnifier au{max_arity, {}};
    const TermPtr pattern = au.run(a, b);
    if (!pattern) return;
    auto p = finalize(pattern, type);
    if (!p || by_key.count(p->key)) return;
    by_key.emplace(p->key, std::move(*p));
  };
  for (const auto& [name, members] : groups) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i].programs.size() >= 2) consider(members[i].term, members[i].term, members[i].type);
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const auto& pi = members[i].programs;
        const auto& pj = members[j].programs;
        const bool distinct = pi.size() > 1 || pj.size() > 1 || *pi.begin() != *pj.begin();
        if (distinct) consider(members[i].term, members[j].term, members[i].type);
      }
    }
  }

  std::vector<Proposal> out;
  for (auto& [key, p] : by_key) {
    const int k = p.arity;
    const TermPtr pattern = strip_lambdas(p.body, k);
    std::set<int> programs;
    for (std::size_t si : sites_by_head[p.head]) {
      std::vector<TermPtr> binds(static_cast<std::size_t>(k));
      if (match(*pattern, sites[si].term, binds, k)) programs.insert(sites[si].program);
    }
    p.programs = static_cast<int>(programs.size());
    if (p.programs >= 2) out.push_back(std::move(p));
  }
  return out;
}

TermPtr rewrite_with(const TermPtr& t, const Term& pattern, int k, const TermPtr& call) {
  if (t->is_lambda()) return Term::lambda(rewrite_with(t->body(), pattern, k, call));
  std::vector<TermPtr> args;
  const TermPtr head = spine_of(t, &args);
  if (args.empty()) return t;
  std::vector<TermPtr> binds(static_cast<std::size_t>(k));
  if (match(pattern, t, binds, k)) {
    for (auto& b : binds) b = rewrite_with(b, pattern, k, call);
    return Term::apply_all(call, binds);
  }
  bool changed = false;
  for (auto& a : args) {
    TermPtr r = rewrite_with(a, pattern, k, call);
    if (r != a) {
      changed = true;
      a = std::move(r);
    }
  }
  return changed ? Term::apply_all(head, args) : t;
}

std::vector<std::string> referenced_abstractions(const Term& t) {
  std::vector<std::string> out;
  std::function<void(const Term&)> walk = [&](const Term& n) {
    switch (n.kind()) {
      case Term::Kind::Prim:
        if (n.primitive().is_abstraction() &&
            std::find(out.begin(), out.end(), n.primitive().name) == out.end()) {
          out.push_back(n.primitive().name);
        }
        break;
      case Term::Kind::Lambda:
        walk(*n.body());
        break;
      case Term::Kind::Apply:
        walk(*n.fn());
        walk(*n.arg());
        break;
      case Term::Kind::Var:
        break;
    }
  };
  walk(t);
  return out;
}

}  // namespace

std::vector<Abstraction> propose_candidates(std::span<const TermPtr> corpus, const Type& request,
                                            int max_arity) {
  std::vector<Abstraction> out;
  for (auto& p : propose(corpus, request, max_arity)) {
    Abstraction a;
    a.arity = p.arity;
    a.body = p.body;
    a.type = canonicalize(infer_type(p.body));
    a.children = referenced_abstractions(*p.body);
    a.use_count = p.programs;
    out.push_back(std::move(a));
  }
  return out;
}

TermPtr rewrite(const TermPtr& program, const Abstraction& a) {
  if (!a.prim) throw UnknownAbstraction("candidate without a primitive");
  return rewrite_with(program, *strip_lambdas(a.body, a.arity), a.arity, Term::prim(a.prim));
}

CompressionResult compress(const std::map<std::string, TermPtr>& corpus, const Grammar& g,
                           int max_arity, int jobs) {
  CompressionResult result;
  result.grammar = g;
  std::vector<std::string> ids;
  std::vector<TermPtr> programs;
  for (const auto& [id, p] : corpus) {
    ids.push_back(id);
    programs.push_back(p);
  }
  const Type request = g.request();
  double corpus_dl = 0.0;
  for (const auto& p : programs) corpus_dl += description_length(g, p, request);
  result.dl_before = corpus_dl;
  double library_dl = 0.0;

  for (;;) {
    const std::vector<Proposal> proposals = propose(programs, request, max_arity);
    if (proposals.empty()) break;
    const std::string name = "f" + std::to_string(result.grammar.table().abstractions().size());

    struct Score {
      bool valid = false;
      double saving = 0.0;
      double body_dl = 0.0;
      double corpus_dl = 0.0;
    };
    std::vector<Score> scores(proposals.size());
    const Grammar& current = result.grammar;
    parallel_for(proposals.size(), jobs, [&](std::size_t i) {
      const Proposal& p = proposals[i];
      Score& s = scores[i];
      try {
        const PrimitivePtr prim = make_abstraction(name, p.body);
        const Grammar extended = current.with_production(prim, 0.0);
        s.body_dl = description_length(current, p.body, p.instance);
        const TermPtr call = Term::prim(prim);
        const Term& pattern = *strip_lambdas(p.body, p.arity);
        double total = 0.0;
        for (const auto& prog : programs) {
          total += description_length(extended, rewrite_with(prog, pattern, p.arity, call), request);
        }
        s.corpus_dl = total;
        s.saving = corpus_dl - (total + s.body_dl);
        s.valid = true;
      } catch (const Error&) {
        s.valid = false;
      }
    });

    int best = -1;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      if (!scores[i].valid || scores[i].saving <= 1e-9) continue;
      if (best < 0) {
        best = static_cast<int>(i);
        continue;
      }
      const auto a = std::llround(scores[i].saving * 1e9);
      const auto b = std::llround(scores[best].saving * 1e9);
      // proposals are sorted by key, so the first of equal savings wins ties
      if (a > b) best = static_cast<int>(i);
    }
    if (best < 0) break;

    const Proposal& p = proposals[best];
    Abstraction a;
    a.name = name;
    a.arity = p.arity;
    a.body = p.body;
    a.prim = make_abstraction(name, p.body);
    a.type = a.prim->type;
    a.children = referenced_abstractions(*p.body);
    result.grammar = result.grammar.with_production(a.prim, 0.0);
    for (auto& prog : programs) prog = rewrite(prog, a);
    corpus_dl = 0.0;
    for (const auto& prog : programs) corpus_dl += description_length(result.grammar, prog, request);
    library_dl += scores[best].body_dl;
    result.new_abstractions.push_back(std::move(a));
  }

  count_uses(result.new_abstractions, programs);
  for (std::size_t i = 0; i < ids.size(); ++i) result.rewritten.emplace(ids[i], programs[i]);
  result.dl_after = corpus_dl + library_dl;
  return result;
}

TermPtr expand(const TermPtr& t, std::span<const Abstraction> lib) {
  std::unordered_set<std::string> known;
  for (const auto& a : lib) known.insert(a.name);
  std::function<TermPtr(const TermPtr&)> inline_all = [&](const TermPtr& n) -> TermPtr {
    switch (n->kind()) {
      case Term::Kind::Prim:
        if (!n->primitive().is_abstraction()) return n;
        if (!known.count(n->primitive().name)) throw UnknownAbstraction(n->primitive().name);
        return inline_all(n->primitive().body);
      case Term::Kind::Lambda:
        return Term::lambda(inline_all(n->body()));
      case Term::Kind::Apply:
        return Term::apply(inline_all(n->fn()), inline_all(n->arg()));
      case Term::Kind::Var:
        return n;
    }
    return n;
  };
  return beta_normalize(inline_all(t));
}

std::vector<Abstraction> library_of(const PrimTable& table) {
  std::vector<Abstraction> lib;
  for (const auto& p : table.abstractions()) {
    Abstraction a;
    a.name = p->name;
    a.arity = p->arity;
    a.type = p->type;
    a.body = p->body;
    a.children = referenced_abstractions(*p->body);
    a.prim = p;
    lib.push_back(std::move(a));
  }
  return lib;
}

void count_uses(std::vector<Abstraction>& lib, std::span<const TermPtr> corpus) {
  std::unordered_map<std::string, const Abstraction*> by_name;
  for (const auto& a : lib) by_name.emplace(a.name, &a);
  // uses[f][g]: occurrences of f in g's body, counted transitively.
  std::map<std::pair<std::string, std::string>, int> memo;
  std::function<int(const std::string&, const Term&)> uses = [&](const std::string& f, const Term& t) -> int {
    switch (t.kind()) {
      case Term::Kind::Prim: {
        const Primitive& p = t.primitive();
        if (!p.is_abstraction()) return 0;
        if (p.name == f) return 1;
        const auto key = std::make_pair(f, p.name);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const int n = uses(f, *p.body);
        memo.emplace(key, n);
        return n;
      }
      case Term::Kind::Lambda:
        return uses(f, *t.body());
      case Term::Kind::Apply:
        return uses(f, *t.fn()) + uses(f, *t.arg());
      case Term::Kind::Var:
        return 0;
    }
    return 0;
  };
  for (auto& a : lib) {
    int total = 0;
    for (const auto& p : corpus) total += uses(a.name, *p);
    a.use_count = total;
  }
}

nlohmann::json library_to_json(std::span<const Abstraction> lib) {
  nlohmann::json fns = nlohmann::json::array();
  for (const auto& a : lib) {
    fns.push_back({{"name", a.name},
                   {"arity", a.arity},
                   {"type", a.type.str()},
                   {"body", print_abstraction_body(a.body, a.arity)},
                   {"children", a.children},
                   {"useCount", a.use_count}});
  }
  return {{"version", kLibrarySchema}, {"functions", fns}};
}

std::vector<Abstraction> library_from_json(const nlohmann::json& doc, const PrimTable& base,
                                           PrimTable* table_out) {
  try {
    if (doc.at("version").get<std::string>() != kLibrarySchema) {
      throw FormatError("unsupported library version " + doc.at("version").dump());
    }
    PrimTable table = base;
    std::vector<Abstraction> lib;
    for (const auto& j : doc.at("functions")) {
      Abstraction a;
      a.name = j.at("name").get<std::string>();
      a.arity = j.at("arity").get<int>();
      if (a.arity < 0 || a.arity > kMaxArity) throw FormatError("abstraction " + a.name + " has arity " + std::to_string(a.arity));
      a.body = parse_abstraction_body(j.at("body").get<std::string>(), a.arity, table);
      a.prim = make_abstraction(a.name, a.body);
      a.type = a.prim->type;
      a.children = j.value("children", std::vector<std::string>{});
      a.use_count = j.value("useCount", 0);
      table = table.with(a.prim);
      lib.push_back(std::move(a));
    }
    if (table_out) *table_out = std::move(table);
    return lib;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed library document: ") + e.what());
  }
}

std::string library_report(std::span<const Abstraction> lib) {
  std::string out;
  for (const auto& a : lib) {
    out += a.name + " [arity " + std::to_string(a.arity) + ", uses " + std::to_string(a.use_count) +
           "] : " + a.type.str() + " := " + print_abstraction_body(a.body, a.arity);
    out += "  =  " + print_program(expand(a.body, lib)) + "\n";
  }
  out += "Number of extracted functions: " + std::to_string(lib.size()) + "\n";
  return out;
}

}  // namespace gridsynth
