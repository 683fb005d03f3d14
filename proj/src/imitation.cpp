#include "gridsynth/imitation.hpp"

#include <atomic>

#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/eval.hpp"
#include "gridsynth/parallel.hpp"

namespace gridsynth {

const Trajectory& TaskSet::find(const std::string& id) const {
  for (const auto& t : tasks) {
    if (t.id == id) return t;
  }
  throw UnknownTaskId(id);
}

RolloutParams default_rollout_params(EnvTag env) {
  if (env == EnvTag::Maze) return {5, 60, 0, 6};
  return {3, 20, 50, 20};
}

std::vector<Trajectory> collect_program_rollouts(const Grammar& g, EnvTag env, int count,
                                                 const RolloutParams& params, std::uint64_t seed) {
  constexpr int kMaxAttempts = 1000;
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const Type request = request_type(env);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw Error("no sampled program produced a rollout after " + std::to_string(kMaxAttempts) +
                    " attempts");
      }
      SampleConfig cfg{params.d_max, request, rng.next()};
      const TermPtr program = sample_program(g, cfg);
      const EpisodeSeed ep{rng.next(), rng.next()};
      const int t = rng.range(params.t_min, params.t_max);
      const int warmup = env == EnvTag::Maze ? 0 : rng.range(0, params.warmup_max);
      auto sim = make_environment(env, ep);
      for (int w = 0; w < warmup && !sim->done(); ++w) sim->step(sim->oracle_action());
      Trajectory traj;
      traj.id = "p" + std::to_string(i);
      traj.env = env;
      traj.source = "program:" + print_program(program);
      traj.seed = ep;
      while (static_cast<int>(traj.steps.size()) < t && !sim->done()) {
        GridState s = sim->observe();
        const auto a = try_exec(program, s);
        if (!a || !sim->spec().allows(*a)) break;
        traj.steps.push_back({std::move(s), *a});
        sim->step(*a);
      }
      if (!traj.steps.empty()) {
        out.push_back(std::move(traj));
        break;
      }
    }
  }
  return out;
}

std::vector<Trajectory> collect_oracle_rollouts(EnvTag env, int episodes, std::uint64_t seed,
                                                int max_steps) {
  std::vector<Trajectory> out;
  const int cap = max_steps > 0 ? max_steps : env_spec(env).max_steps;
  for (int i = 0; i < episodes; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const EpisodeSeed ep{rng.next(), rng.next()};
    auto sim = make_environment(env, ep);
    Trajectory traj;
    traj.id = "o" + std::to_string(i);
    traj.env = env;
    traj.source = "oracle";
    traj.seed = ep;
    while (!sim->done() && static_cast<int>(traj.steps.size()) < cap) {
      const Action a = sim->oracle_action();
      traj.steps.push_back({sim->observe(), a});
      sim->step(a);
    }
    if (!traj.steps.empty()) out.push_back(std::move(traj));
  }
  return out;
}

TaskSet slice(std::span<const Trajectory> trajs, int L) {
  if (L < 1) throw FormatError("slice length must be >= 1");
  TaskSet ts;
  ts.length = L;
  if (!trajs.empty()) ts.env = trajs.front().env;
  for (const auto& t : trajs) {
    const int n = static_cast<int>(t.steps.size());
    for (int off = 0; off + L <= n; off += L) {
      Trajectory w;
      w.id = t.id + "@" + std::to_string(t.offset + off);
      w.env = t.env;
      w.source = t.source;
      w.seed = t.seed;
      w.offset = t.offset + off;
      w.steps.assign(t.steps.begin() + off, t.steps.begin() + off + L);
      ts.tasks.push_back(std::move(w));
    }
  }
  return ts;
}

bool imitates(const TermPtr& program, const Trajectory& task) {
  for (const auto& step : task.steps) {
    const auto a = try_exec(program, step.state);
    if (!a || *a != step.action) return false;
  }
  return true;
}

double accuracy(const std::map<std::string, std::vector<TermPtr>>& solutions, const TaskSet& tasks,
                int jobs) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tasks.tasks.size(); ++i) index.emplace(tasks.tasks[i].id, i);
  std::vector<const std::vector<TermPtr>*> per_task(tasks.tasks.size(), nullptr);
  for (const auto& [id, programs] : solutions) {
    const auto it = index.find(id);
    if (it == index.end()) throw UnknownTaskId(id);
    per_task[it->second] = &programs;
  }
  if (tasks.tasks.empty()) return 0.0;
  std::vector<char> solved(tasks.tasks.size(), 0);
  parallel_for(tasks.tasks.size(), jobs, [&](std::size_t i) {
    if (!per_task[i]) return;
    for (const auto& p : *per_task[i]) {
      if (imitates(p, tasks.tasks[i])) {
        solved[i] = 1;
        return;
      }
    }
  });
  std::size_t n = 0;
  for (char s : solved) n += s ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(tasks.tasks.size());
}

std::string encode_prompt(const Trajectory& t) {
  std::string out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i].state;
    if (i > 0) out += ' ';
    for (std::uint8_t c : s.cells) {
      if (c >= 10) throw MultiDigitCode("object code " + std::to_string(c) + " in step " + std::to_string(i));
      out += static_cast<char>('0' + c);
    }
    if (t.env == EnvTag::Maze) {
      const int d = s.direction.value_or(0);
      out += static_cast<char>('0' + d);
    }
    out += ' ';
    out += action_name(t.steps[i].action);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json step_to_json(const Step& s) {
  nlohmann::json j;
  j["grid"] = s.state.cells;
  if (s.state.direction) j["direction"] = *s.state.direction;
  j["action"] = std::string(action_name(s.action));
  return j;
}

Step step_from_json(const nlohmann::json& j, EnvTag env) {
  const EnvSpec& spec = env_spec(env);
  Step s;
  s.state = GridState(env, spec.height, spec.width);
  const auto cells = j.at("grid").get<std::vector<int>>();
  if (cells.size() != s.state.cells.size()) {
    throw FormatError("grid has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(s.state.cells.size()));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) s.state.cells[i] = static_cast<std::uint8_t>(cells[i]);
  if (j.contains("direction")) s.state.direction = j.at("direction").get<int>();
  const auto a = action_from_name(j.at("action").get<std::string>());
  if (!a) throw FormatError("unknown action " + j.at("action").dump());
  s.action = *a;
  return s;
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) steps.push_back(step_to_json(s));
  return {{"id", t.id},
          {"envTag", std::string(env_name(t.env))},
          {"provenance", t.source},
          {"seeds", {{"layout", t.seed.layout}, {"dynamics", t.seed.dynamics}}},
          {"offset", t.offset},
          {"steps", steps}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  try {
    Trajectory t;
    t.id = j.at("id").get<std::string>();
    t.env = env_from_name(j.at("envTag").get<std::string>());
    t.source = j.value("provenance", std::string("oracle"));
    if (j.contains("seeds")) {
      t.seed.layout = j.at("seeds").at("layout").get<std::uint64_t>();
      t.seed.dynamics = j.at("seeds").at("dynamics").get<std::uint64_t>();
    }
    t.offset = j.value("offset", 0);
    for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s, t.env));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed trajectory: ") + e.what());
  }
}

nlohmann::json trajectories_to_json(std::span<const Trajectory> trajs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : trajs) arr.push_back(trajectory_to_json(t));
  return {{"version", kTrajectorySchema}, {"trajectories", arr}};
}

std::vector<Trajectory> trajectories_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<std::string>() != kTrajectorySchema) {
      throw FormatError("unsupported trajectory version " + doc.at("version").dump());
    }
    std::vector<Trajectory> out;
    for (const auto& j : doc.at("trajectories")) out.push_back(trajectory_from_json(j));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed trajectory document: ") + e.what());
  }
}

nlohmann::json taskset_to_json(const TaskSet& ts) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : ts.tasks) tasks.push_back(trajectory_to_json(t));
  return {{"version", kTaskSetSchema},
          {"envTag", std::string(env_name(ts.env))},
          {"L", ts.length},
          {"tasks", tasks}};
}

TaskSet taskset_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<std::string>() != kTaskSetSchema) {
      throw FormatError("unsupported task set version " + doc.at("version").dump());
    }
    TaskSet ts;
    ts.env = env_from_name(doc.at("envTag").get<std::string>());
    ts.length = doc.at("L").get<int>();
    for (const auto& j : doc.at("tasks")) ts.tasks.push_back(trajectory_from_json(j));
    return ts;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed task set: ") + e.what());
  }
}

}  // namespace gridsynth
