#include "gridsynth/enumerator.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/parallel.hpp"

namespace gridsynth {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::int64_t dl_key(double dl) { return std::llround(dl * 1e9); }

}  // namespace

struct Enumerator::Impl {
  struct ChainNode {
    int parent;
    std::uint8_t type;
    std::uint16_t choice;
  };
  struct HoleNode {
    int next;
    std::uint8_t type;
    std::int16_t depth;
  };
  struct State {
    double f;
    double g;
    int chain;
    int holes;
  };
  struct StateCmp {
    bool operator()(const State& a, const State& b) const { return a.f > b.f; }
  };
  struct Finished {
    std::int64_t key;
    EnumeratedProgram program;
  };
  struct FinishedCmp {
    bool operator()(const Finished& a, const Finished& b) const {
      if (a.key != b.key) return a.key > b.key;
      return a.program.text > b.program.text;
    }
  };

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::shared_ptr<const ChoiceTable> table;
  int params = 0;
  // min_cost[d][t]: cheapest completion of a hole of type t with depth budget d.
  std::vector<std::array<double, kNumBaseTypes>> min_cost;
  std::vector<ChainNode> chain;
  std::vector<HoleNode> holes;
  std::priority_queue<State, std::vector<State>, StateCmp> frontier;
  std::priority_queue<Finished, std::vector<Finished>, FinishedCmp> ready;
  std::uint64_t yielded = 0;

  Impl(const Grammar& g, const Type& request, int max_depth) {
    const RequestShape shape = request_shape(request);
    params = static_cast<int>(shape.params.size());
    table = g.choices(shape.params);
    const int body_depth = max_depth - params;
    if (body_depth < 1) return;
    min_cost.assign(static_cast<std::size_t>(body_depth + 1), {});
    min_cost[0].fill(kInf);
    for (int d = 1; d <= body_depth; ++d) {
      for (int t = 0; t < kNumBaseTypes; ++t) {
        double best = kInf;
        for (const auto& c : table->at(static_cast<BaseType>(t))) {
          if (c.min_depth > d) continue;
          double cost = -c.logp;
          for (BaseType a : c.args) cost += min_cost[d - 1][static_cast<int>(a)];
          best = std::min(best, cost);
        }
        min_cost[d][t] = best;
      }
    }
    const double h = min_cost[body_depth][static_cast<int>(shape.result)];
    if (!std::isfinite(h)) return;
    holes.push_back({-1, static_cast<std::uint8_t>(shape.result), static_cast<std::int16_t>(body_depth)});
    frontier.push({h, 0.0, -1, 0});
  }

  TermPtr build(int chain_end) const {
    std::vector<std::pair<int, int>> seq;  // (type, choice) in pre-order
    for (int c = chain_end; c >= 0; c = chain[c].parent) seq.emplace_back(chain[c].type, chain[c].choice);
    std::reverse(seq.begin(), seq.end());
    std::size_t pos = 0;
    TermPtr body = build_from(seq, pos);
    for (int i = 0; i < params; ++i) body = Term::lambda(body);
    return body;
  }

  TermPtr build_from(const std::vector<std::pair<int, int>>& seq, std::size_t& pos) const {
    const auto [t, ci] = seq[pos++];
    const Choice& c = table->at(static_cast<BaseType>(t))[ci];
    std::vector<TermPtr> args;
    args.reserve(c.args.size());
    for (std::size_t i = 0; i < c.args.size(); ++i) args.push_back(build_from(seq, pos));
    return Term::apply_all(table->head(c), args);
  }

  void expand(const State& s) {
    const HoleNode hole = holes[s.holes];
    const auto& cs = table->at(static_cast<BaseType>(hole.type));
    const double base_f = s.f - min_cost[hole.depth][hole.type];
    for (std::size_t ci = 0; ci < cs.size(); ++ci) {
      const Choice& c = cs[ci];
      if (c.min_depth > hole.depth) continue;
      double f = base_f - c.logp;
      for (BaseType a : c.args) f += min_cost[hole.depth - 1][static_cast<int>(a)];
      int stack = hole.next;
      for (std::size_t i = c.args.size(); i-- > 0;) {
        holes.push_back({stack, static_cast<std::uint8_t>(c.args[i]),
                         static_cast<std::int16_t>(hole.depth - 1)});
        stack = static_cast<int>(holes.size()) - 1;
      }
      chain.push_back({s.chain, hole.type, static_cast<std::uint16_t>(ci)});
      frontier.push({f, s.g - c.logp, static_cast<int>(chain.size()) - 1, stack});
    }
  }

  std::optional<EnumeratedProgram> next() {
    for (;;) {
      if (!ready.empty() && (frontier.empty() || ready.top().key < dl_key(frontier.top().f))) {
        EnumeratedProgram p = ready.top().program;
        ready.pop();
        ++yielded;
        return p;
      }
      if (frontier.empty()) return std::nullopt;
      const State s = frontier.top();
      frontier.pop();
      if (s.holes < 0) {
        TermPtr term = build(s.chain);
        std::string text = print_program(term);
        ready.push({dl_key(s.g), {std::move(term), s.g, std::move(text)}});
      } else {
        expand(s);
      }
    }
  }
};

Enumerator::Enumerator(const Grammar& g, const Type& request, int max_depth)
    : impl_(std::make_unique<Impl>(g, request, max_depth)) {}
Enumerator::~Enumerator() = default;
Enumerator::Enumerator(Enumerator&&) noexcept = default;
Enumerator& Enumerator::operator=(Enumerator&&) noexcept = default;

std::optional<EnumeratedProgram> Enumerator::next() { return impl_->next(); }
std::uint64_t Enumerator::yielded() const { return impl_->yielded; }
std::size_t Enumerator::frontier_size() const { return impl_->frontier.size(); }

std::vector<EnumeratedProgram> enumerate(const Grammar& g, const Type& request,
                                         const SearchBudget& budget) {
  const auto t0 = Clock::now();
  const std::uint64_t cap = budget.max_candidates.value_or(std::numeric_limits<std::uint64_t>::max());
  Enumerator e(g, request, budget.max_depth);
  std::vector<EnumeratedProgram> out;
  while (out.size() < cap) {
    if ((out.size() & 1023) == 0 && seconds_since(t0) > budget.timeout_sec) break;
    auto p = e.next();
    if (!p) break;
    out.push_back(std::move(*p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solving

namespace {

std::string task_key(const Trajectory& t) {
  std::string key(env_name(t.env));
  for (const auto& s : t.steps) {
    key += '|';
    key.append(s.state.cells.begin(), s.state.cells.end());
    key += static_cast<char>(s.state.direction.value_or(-1));
    key += static_cast<char>(s.action);
  }
  return key;
}

}  // namespace

SolvedTask solve_task(const Grammar& g, const Trajectory& task, const SearchBudget& budget) {
  return solve_tasks(g, std::span<const Trajectory>(&task, 1), budget, 1).front();
}

std::vector<SolvedTask> solve_tasks(const Grammar& g, std::span<const Trajectory> tasks,
                                    const SearchBudget& budget, int jobs) {
  const auto t0 = Clock::now();
  std::vector<SolvedTask> results(tasks.size());
  if (tasks.empty()) return results;
  for (const auto& t : tasks) {
    if (t.env != g.env()) throw TypeMismatch(std::string(env_name(g.env())) + " task",
                                             std::string(env_name(t.env)) + " task", t.id);
    if (t.steps.empty()) throw FormatError("task " + t.id + " has no steps");
  }

  std::unordered_map<std::string, std::size_t> unique_of;
  std::vector<std::size_t> rep(tasks.size());
  std::vector<std::size_t> uniques;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto [it, inserted] = unique_of.emplace(task_key(tasks[i]), i);
    rep[i] = it->second;
    if (inserted) uniques.push_back(i);
  }

  const std::uint64_t cap = budget.max_candidates.value_or(std::numeric_limits<std::uint64_t>::max());
  const std::size_t top_k = static_cast<std::size_t>(std::max(1, budget.top_k));
  constexpr std::size_t kBlock = 2048;

  std::vector<char> done(tasks.size(), 0);
  std::vector<std::size_t> active = uniques;
  Enumerator stream(g, request_type(g.env()), budget.max_depth);
  std::vector<EnumeratedProgram> block;
  std::uint64_t pos = 0;
  bool exhausted = false;

  while (!active.empty()) {
    block.clear();
    while (block.size() < kBlock && pos + block.size() < cap) {
      auto p = stream.next();
      if (!p) {
        exhausted = true;
        break;
      }
      block.push_back(std::move(*p));
    }
    parallel_for(active.size(), jobs, [&](std::size_t k) {
      const std::size_t ti = active[k];
      SolvedTask& r = results[ti];
      for (std::size_t j = 0; j < block.size(); ++j) {
        if (!imitates(block[j].term, tasks[ti])) continue;
        r.programs.push_back(block[j].term);
        r.dl.push_back(block[j].dl);
        if (r.programs.size() >= top_k) {
          r.candidates_tried = pos + j + 1;
          r.wall_time_sec = seconds_since(t0);
          done[ti] = 1;
          return;
        }
      }
    });
    pos += block.size();
    const bool out_of_time = seconds_since(t0) > budget.timeout_sec;
    std::vector<std::size_t> still;
    for (std::size_t ti : active) {
      if (done[ti]) continue;
      if (exhausted || pos >= cap || out_of_time) {
        results[ti].candidates_tried = pos;
        results[ti].wall_time_sec = seconds_since(t0);
        done[ti] = 1;
        continue;
      }
      still.push_back(ti);
    }
    active = std::move(still);
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (rep[i] != i) results[i] = results[rep[i]];
    results[i].task_id = tasks[i].id;
  }
  return results;
}

nlohmann::json solved_to_json(std::span<const SolvedTask> solved) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& s : solved) {
    nlohmann::json programs = nlohmann::json::array();
    for (const auto& p : s.programs) programs.push_back(print_program(p));
    tasks.push_back({{"taskId", s.task_id},
                     {"programs", programs},
                     {"dlNats", s.dl},
                     {"candidatesTried", s.candidates_tried}});
  }
  return {{"version", kSolvedSchema}, {"tasks", tasks}};
}

nlohmann::json timings_to_json(std::span<const SolvedTask> solved) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& s : solved) tasks.push_back({{"taskId", s.task_id}, {"wallTimeSec", s.wall_time_sec}});
  return {{"version", "gridsynth-timings-v1"}, {"tasks", tasks}};
}

std::vector<SolvedTask> solved_from_json(const nlohmann::json& doc, const PrimTable& prims) {
  try {
    if (doc.at("version").get<std::string>() != kSolvedSchema) {
      throw FormatError("unsupported solved-task version " + doc.at("version").dump());
    }
    std::vector<SolvedTask> out;
    for (const auto& j : doc.at("tasks")) {
      SolvedTask s;
      s.task_id = j.at("taskId").get<std::string>();
      for (const auto& p : j.at("programs")) s.programs.push_back(parse_program(p.get<std::string>(), prims));
      s.dl = j.at("dlNats").get<std::vector<double>>();
      s.candidates_tried = j.at("candidatesTried").get<std::uint64_t>();
      out.push_back(std::move(s));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed solved-task document: ") + e.what());
  }
}

}  // namespace gridsynth
