#include "gridsynth/curriculum.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"

namespace gridsynth {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFrontierSchema = "gridsynth-frontier-v1";
constexpr std::uint64_t kOracleStream = 101;
constexpr std::uint64_t kCorpusStream = 1000;
constexpr std::uint64_t kEvalStream = 0xE7A1;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Evenly spaced subset of at most `cap` tasks (all when cap <= 0).
std::vector<Trajectory> cap_tasks(std::vector<Trajectory> tasks, int cap) {
  if (cap <= 0 || static_cast<int>(tasks.size()) <= cap) return tasks;
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(cap));
  for (int i = 0; i < cap; ++i) out.push_back(std::move(tasks[i * tasks.size() / cap]));
  return out;
}

nlohmann::json frontier_to_json(const std::map<std::string, TermPtr>& frontier) {
  nlohmann::json programs = nlohmann::json::object();
  for (const auto& [id, p] : frontier) programs[id] = print_program(p);
  return {{"version", kFrontierSchema}, {"programs", programs}};
}

std::vector<TermPtr> frontier_programs(const std::map<std::string, TermPtr>& frontier) {
  std::vector<TermPtr> out;
  out.reserve(frontier.size());
  for (const auto& [id, p] : frontier) out.push_back(p);
  return out;
}

nlohmann::json report_to_json(const IterationReport& r) {
  return {{"version", kReportSchema},
          {"iteration", r.iteration},
          {"L", r.length},
          {"solveRate", r.solve_rate},
          {"nTasks", r.n_tasks},
          {"solvedTasks", r.solved_tasks},
          {"newAbstractions", r.new_abstractions},
          {"librarySize", r.library_size},
          {"grammarSnapshot", r.grammar_snapshot},
          {"compression", {{"dlBefore", r.dl_before}, {"dlAfter", r.dl_after}}}};
}

nlohmann::json history_to_json(const std::vector<HistoryEntry>& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& h : history) {
    out.push_back({{"iteration", h.iteration},
                   {"L", h.length},
                   {"solveRate", h.solve_rate},
                   {"librarySize", h.library_size},
                   {"wallTimeSec", h.wall_time_sec}});
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::string_view profile_name(Profile p) { return p == Profile::Desk ? "desk" : "paper"; }

Profile profile_from_name(std::string_view name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper") return Profile::Paper;
  throw FormatError("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

SearchBudget RunConfig::budget() const {
  SearchBudget b;
  b.timeout_sec = search_timeout_sec;
  b.top_k = std::max(1, std::min(top_k, P));
  b.max_candidates = max_candidates;
  b.max_depth = d_max;
  return b;
}

RolloutParams RunConfig::rollout_params() const { return {t_min, t_max, warmup_max, d_max}; }

RunConfig default_config(EnvTag env, Profile profile) {
  RunConfig c;
  c.env = env;
  c.profile = profile;
  const RolloutParams rp = default_rollout_params(env);
  c.t_min = rp.t_min;
  c.t_max = rp.t_max;
  c.d_max = rp.d_max;
  c.warmup_max = rp.warmup_max;
  c.P = env == EnvTag::Maze ? 100 : 500;
  if (profile == Profile::Paper) {
    c.search_timeout_sec = 720.0;
    c.corpus_size = 50000;
    c.max_candidates.reset();
    c.max_tasks = 0;
    c.oracle_episodes = 20;
    c.eval_episodes = 20;
    c.max_iterations = 100;
  } else {
    c.search_timeout_sec = 30.0;
    c.corpus_size = 2000;
    c.max_candidates = 100000;
    c.max_tasks = 60;
    c.oracle_episodes = 3;
    c.eval_episodes = 3;
    c.max_iterations = 8;
  }
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = {{"envTag", std::string(env_name(c.env))},
                      {"profile", std::string(profile_name(c.profile))},
                      {"t_min", c.t_min},
                      {"t_max", c.t_max},
                      {"d_max", c.d_max},
                      {"warmupMax", c.warmup_max},
                      {"P", c.P},
                      {"searchTimeoutSec", c.search_timeout_sec},
                      {"topK", c.top_k},
                      {"corpusSize", c.corpus_size},
                      {"maxTasks", c.max_tasks},
                      {"oracleEpisodes", c.oracle_episodes},
                      {"oracleMaxSteps", c.oracle_max_steps},
                      {"evalEpisodes", c.eval_episodes},
                      {"maxIterations", c.max_iterations},
                      {"maxArity", c.max_arity},
                      {"seed", c.seed},
                      {"outputDirectory", c.out_dir}};
  j["maxCandidates"] = c.max_candidates ? nlohmann::json(*c.max_candidates) : nlohmann::json(nullptr);
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c = default_config(env_from_name(j.at("envTag").get<std::string>()),
                                 profile_from_name(j.at("profile").get<std::string>()));
    c.t_min = j.at("t_min").get<int>();
    c.t_max = j.at("t_max").get<int>();
    c.d_max = j.at("d_max").get<int>();
    c.warmup_max = j.at("warmupMax").get<int>();
    c.P = j.at("P").get<int>();
    c.search_timeout_sec = j.at("searchTimeoutSec").get<double>();
    c.top_k = j.at("topK").get<int>();
    c.corpus_size = j.at("corpusSize").get<int>();
    c.max_tasks = j.at("maxTasks").get<int>();
    c.oracle_episodes = j.at("oracleEpisodes").get<int>();
    c.oracle_max_steps = j.at("oracleMaxSteps").get<int>();
    c.eval_episodes = j.at("evalEpisodes").get<int>();
    c.max_iterations = j.at("maxIterations").get<int>();
    c.max_arity = j.at("maxArity").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.out_dir = j.at("outputDirectory").get<std::string>();
    if (j.at("maxCandidates").is_null()) {
      c.max_candidates.reset();
    } else {
      c.max_candidates = j.at("maxCandidates").get<std::uint64_t>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run configuration: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Curriculum logic

std::optional<CurriculumState> advance(const CurriculumState& cs, const IterationReport& report) {
  CurriculumState next = cs;
  next.iteration = cs.iteration + 1;
  next.history.push_back({report.iteration, cs.length, report.solve_rate, report.library_size,
                          report.wall_time_sec});
  if (report.solve_rate >= kAdvanceThreshold) {
    next.length = cs.length + 1;
    next.consecutive_fails = 0;
    return next;
  }
  next.consecutive_fails = cs.consecutive_fails + 1;
  if (next.consecutive_fails >= 2) return std::nullopt;
  return next;
}

RunContext make_context(const RunConfig& config) {
  RunContext ctx;
  ctx.config = config;
  ctx.oracle = collect_oracle_rollouts(config.env, config.oracle_episodes,
                                       derive_seed(config.seed, kOracleStream), config.oracle_max_steps);
  ctx.grammar = Grammar::uniform(make_prim_table(config.env));
  return ctx;
}

IterationReport run_iteration(const CurriculumState& cs, RunContext& ctx, const fs::path& iter_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig& cfg = ctx.config;
  const bool persist = !iter_dir.empty();
  if (persist) fs::create_directories(iter_dir);

  IterationReport report;
  report.iteration = cs.iteration;
  report.length = cs.length;

  nlohmann::json phases;
  auto lap = [&, t = std::chrono::steady_clock::now()](const char* name) mutable {
    phases[name] = seconds_since(t);
    t = std::chrono::steady_clock::now();
  };

  // (1) fresh random-program corpus
  const auto corpus = collect_program_rollouts(
      ctx.grammar, cfg.env, cfg.corpus_size, cfg.rollout_params(),
      derive_seed(cfg.seed, kCorpusStream + static_cast<std::uint64_t>(cs.iteration)));
  if (persist) {
    std::string prompts;
    std::string programs;
    for (const auto& t : corpus) {
      prompts += encode_prompt(t) + "\n";
      programs += t.source.substr(t.source.find(':') + 1) + "\n";
    }
    write_text(iter_dir / "corpus.prompts.txt", prompts);
    write_text(iter_dir / "corpus.programs.txt", programs);
  }
  lap("corpusSec");

  // (2) refit on everything solved so far
  const std::vector<TermPtr> solved_so_far = frontier_programs(ctx.frontier);
  const Grammar grammar = refit(ctx.grammar, solved_so_far);
  report.grammar_snapshot = (iter_dir.filename() / "grammar.json").generic_string();
  if (persist) write_json(iter_dir / "grammar.json", grammar_to_json(grammar));

  // (3) solve the oracle tasks at length L
  TaskSet tasks = slice(ctx.oracle, cs.length);
  tasks.env = cfg.env;
  tasks.tasks = cap_tasks(std::move(tasks.tasks), cfg.max_tasks);
  if (persist) write_json(iter_dir / "tasks.json", taskset_to_json(tasks));
  const auto solved = solve_tasks(grammar, tasks.tasks, cfg.budget(), cfg.jobs);
  if (persist) write_json(iter_dir / "solved.json", solved_to_json(solved));
  std::map<std::string, std::vector<TermPtr>> solutions;
  for (const auto& s : solved) {
    if (!s.solved()) continue;
    solutions[s.task_id] = s.programs;
    report.solved_tasks.push_back(s.task_id);
    ctx.frontier["L" + std::to_string(cs.length) + "/" + s.task_id] = s.programs.front();
  }
  report.n_tasks = static_cast<int>(tasks.tasks.size());
  report.solve_rate = tasks.tasks.empty() ? 0.0 : accuracy(solutions, tasks, cfg.jobs);
  lap("searchSec");

  // (4) compress the frontier into the library
  if (!ctx.frontier.empty()) {
    const std::map<std::string, TermPtr> before = ctx.frontier;
    CompressionResult cr = compress(ctx.frontier, grammar, cfg.max_arity, cfg.jobs);
    if (ctx.on_compress) ctx.on_compress(before, cr);
    report.dl_before = cr.dl_before;
    report.dl_after = cr.dl_after;
    for (const auto& a : cr.new_abstractions) report.new_abstractions.push_back(a.name);
    ctx.frontier = std::move(cr.rewritten);
    ctx.grammar = std::move(cr.grammar);
  } else {
    ctx.grammar = grammar;
  }
  std::vector<Abstraction> lib = library_of(ctx.grammar.table());
  count_uses(lib, frontier_programs(ctx.frontier));
  report.library_size = static_cast<int>(lib.size());
  if (persist) {
    write_json(iter_dir / "library.json", library_to_json(lib));
    write_json(iter_dir / "frontier.json", frontier_to_json(ctx.frontier));
  }
  lap("compressSec");
  if (persist) {
    nlohmann::json timings = timings_to_json(solved);
    timings["phases"] = phases;
    write_json(iter_dir / "timings.json", timings);
  }

  // (5) report
  report.wall_time_sec = seconds_since(t0);
  if (persist) write_json(iter_dir / "report.json", report_to_json(report));
  return report;
}

RunResult run_curriculum(const RunConfig& config,
                         const std::function<void(const IterationReport&)>& on_iteration,
                         RunContext* context_out) {
  RunContext local;
  RunContext& ctx = context_out ? *context_out : local;
  auto hook = ctx.on_compress;
  ctx = make_context(config);
  ctx.on_compress = hook;

  const bool persist = !config.out_dir.empty();
  const fs::path out(config.out_dir);
  if (persist) {
    fs::create_directories(out);
    write_json(out / "oracle.json", trajectories_to_json(ctx.oracle));
  }

  RunResult result;
  CurriculumState cs;
  auto write_run = [&](const CurriculumState& state, bool stopped) {
    if (!persist) return;
    write_json(out / "run.json", {{"version", kRunSchema},
                                  {"config", config_to_json(config)},
                                  {"history", history_to_json(state.history)},
                                  {"state", {{"L", state.length},
                                             {"consecutiveFails", state.consecutive_fails},
                                             {"iteration", state.iteration}}},
                                  {"stopped", stopped},
                                  {"finalGrammar", "final_grammar.json"},
                                  {"library", "library.json"}});
  };

  while (cs.iteration < config.max_iterations) {
    const fs::path iter_dir = persist ? out / ("iter-" + std::to_string(cs.iteration)) : fs::path();
    IterationReport report = run_iteration(cs, ctx, iter_dir);
    if (on_iteration) on_iteration(report);
    result.reports.push_back(report);
    auto next = advance(cs, report);
    if (!next) {
      cs.history.push_back({report.iteration, cs.length, report.solve_rate, report.library_size,
                            report.wall_time_sec});
      cs.consecutive_fails += 1;
      cs.iteration += 1;
      result.stopped_by_rule = true;
      break;
    }
    cs = std::move(*next);
    write_run(cs, false);
  }

  result.final_grammar = refit(ctx.grammar, frontier_programs(ctx.frontier));
  result.frontier = ctx.frontier;
  result.state = cs;
  if (persist) {
    std::vector<Abstraction> lib = library_of(result.final_grammar.table());
    count_uses(lib, frontier_programs(ctx.frontier));
    write_json(out / "final_grammar.json", grammar_to_json(result.final_grammar));
    write_json(out / "library.json", library_to_json(lib));
    write_json(out / "frontier.json", frontier_to_json(ctx.frontier));
  }
  write_run(cs, result.stopped_by_rule);
  return result;
}

// ---------------------------------------------------------------------------
// Loading and evaluation

LoadedRun load_run(const fs::path& dir) {
  const nlohmann::json run = read_json(dir / "run.json");
  try {
    if (run.at("version").get<std::string>() != kRunSchema) {
      throw FormatError("unsupported run version " + run.at("version").dump());
    }
    LoadedRun lr;
    lr.config = config_from_json(run.at("config"));
    lr.library = library_from_json(read_json(dir / run.at("library").get<std::string>()),
                                   make_prim_table(lr.config.env), &lr.table);
    lr.grammar = grammar_from_json(read_json(dir / run.at("finalGrammar").get<std::string>()), lr.table);
    for (const auto& h : run.at("history")) lr.max_length = std::max(lr.max_length, h.at("L").get<int>());
    return lr;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run.json: ") + e.what());
  }
}

std::vector<EvalRow> evaluate_run(const LoadedRun& run, int jobs) {
  const RunConfig& cfg = run.config;
  const auto oracle = collect_oracle_rollouts(cfg.env, cfg.eval_episodes,
                                              derive_seed(cfg.seed, kEvalStream), cfg.oracle_max_steps);
  std::vector<EvalRow> rows;
  for (int L = kInitialLength; L <= run.max_length; ++L) {
    TaskSet tasks = slice(oracle, L);
    tasks.env = cfg.env;
    tasks.tasks = cap_tasks(std::move(tasks.tasks), cfg.max_tasks);
    EvalRow row;
    row.length = L;
    row.n_tasks = static_cast<int>(tasks.tasks.size());
    if (!tasks.tasks.empty()) {
      const auto solved = solve_tasks(run.grammar, tasks.tasks, cfg.budget(), jobs);
      std::map<std::string, std::vector<TermPtr>> solutions;
      for (const auto& s : solved) {
        if (s.solved()) solutions[s.task_id] = s.programs;
      }
      row.accuracy = accuracy(solutions, tasks, jobs);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::string out = "L,accuracy,n_tasks\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%d\n", r.length, r.accuracy, r.n_tasks);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  if (!f) throw Error("failed writing " + p.string());
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

}  // namespace gridsynth
