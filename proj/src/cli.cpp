#include "gridsynth/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridsynth/curriculum.hpp"
#include "gridsynth/dsl.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/explain.hpp"

namespace gridsynth {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCurriculumHelp =
    "Runs the curriculum: sample a fresh program corpus, refit the grammar on solved programs, "
    "solve oracle sub-trajectories of length L, compress solutions into the library. L starts at 3 "
    "and grows by one whenever at least 10% of the tasks are solved; the run stops after two "
    "consecutive iterations at the same L fall below 10%.";

/// Expands `--config FILE` into `--key=value` arguments placed right after
/// the subcommand name, so that explicit flags (which come later) win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + consumed));
    std::vector<std::string> injected;
    const std::string text = read_text(path);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": expected key=value");
      }
      injected.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
    }
    // args[1] is the subcommand
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    break;
  }
  return args;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int latest_iteration(const fs::path& run_dir) {
  int best = -1;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("iter-", 0) == 0) {
      best = std::max(best, std::stoi(name.substr(5)));
    }
  }
  return best;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gridsynth: synthesize DSL programs that imitate grid-world agents, grow a library "
               "of abstractions, and explain program decisions."};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // collect
  auto* collect = app.add_subcommand("collect", "Record scripted-oracle trajectories as JSON");
  std::string c_env;
  int c_episodes = 3;
  std::uint64_t c_seed = 0;
  int c_max_steps = 0;
  std::string c_out;
  collect->add_option("--env", c_env, "maze | asterix | spaceinvaders")->required();
  collect->add_option("--episodes", c_episodes, "Number of episodes")->capture_default_str();
  collect->add_option("--seed", c_seed, "Base seed")->capture_default_str();
  collect->add_option("--max-steps", c_max_steps, "Episode cap (0 = environment cap)");
  collect->add_option("--out", c_out, "Output JSON file")->required();

  // run
  auto* run = app.add_subcommand("run", "Run the curriculum loop");
  run->footer(kCurriculumHelp);
  std::string r_env;
  std::string r_profile = "desk";
  std::string r_out;
  std::uint64_t r_seed = 0;
  int r_jobs = 0;
  double r_timeout = 0;
  int r_top_k = 0, r_corpus = 0, r_max_tasks = 0, r_max_iter = 0, r_oracle_eps = 0, r_eval_eps = 0;
  int r_t_min = 0, r_t_max = 0, r_d_max = 0, r_P = 0, r_oracle_steps = 0, r_arity = 0;
  std::uint64_t r_max_candidates = 0;
  run->add_option("--env", r_env, "maze | asterix | spaceinvaders")->required();
  run->add_option("--profile", r_profile, "desk (scaled budgets) | paper (full-scale budgets)")->capture_default_str();
  run->add_option("--seed", r_seed, "Base seed")->capture_default_str();
  run->add_option("--out", r_out, "Run directory")->required();
  run->add_option("--jobs", r_jobs, "Parallel width (default: all cores)");
  auto* o_timeout = run->add_option("--timeout", r_timeout, "Search timeout per batch, seconds");
  auto* o_top_k = run->add_option("--top-k", r_top_k, "Programs kept per task");
  auto* o_corpus = run->add_option("--corpus-size", r_corpus, "Random programs sampled per iteration");
  auto* o_cands = run->add_option("--max-candidates", r_max_candidates, "Enumerated programs per task (0 = unbounded)");
  auto* o_tasks = run->add_option("--max-tasks", r_max_tasks, "Tasks per iteration (0 = all)");
  auto* o_iters = run->add_option("--max-iterations", r_max_iter, "Iteration cap");
  auto* o_oeps = run->add_option("--oracle-episodes", r_oracle_eps, "Oracle episodes for training tasks");
  auto* o_eeps = run->add_option("--eval-episodes", r_eval_eps, "Oracle episodes for evaluation");
  auto* o_osteps = run->add_option("--oracle-max-steps", r_oracle_steps, "Oracle episode cap (0 = environment cap)");
  auto* o_tmin = run->add_option("--t-min", r_t_min, "Shortest program rollout");
  auto* o_tmax = run->add_option("--t-max", r_t_max, "Longest program rollout");
  auto* o_dmax = run->add_option("--d-max", r_d_max, "Maximum program depth (binders count)");
  auto* o_P = run->add_option("--programs-per-task", r_P, "Cap P on programs kept per task");
  auto* o_arity = run->add_option("--max-arity", r_arity, "Abstraction arity bound (0..3)")->check(CLI::Range(0, 3));

  // eval
  auto* eval = app.add_subcommand("eval", "Accuracy per sequence length on fresh-seed oracle data");
  std::string e_dir;
  std::string e_seeds = "fresh";
  std::string e_out;
  int e_jobs = 0;
  eval->add_option("run_dir", e_dir, "Run directory")->required();
  eval->add_option("--seeds", e_seeds, "Evaluation seeds")->check(CLI::IsMember({"fresh"}))->capture_default_str();
  eval->add_option("--out", e_out, "CSV path (default: <run_dir>/eval.csv)");
  eval->add_option("--jobs", e_jobs, "Parallel width (default: all cores)");

  // library
  auto* library = app.add_subcommand("library", "Print the learned library");
  std::string l_dir;
  int l_iter = -1;
  library->add_option("run_dir", l_dir, "Run directory")->required();
  library->add_option("--iter", l_iter, "Show the library after this iteration instead of the final one");

  // explain
  auto* explain = app.add_subcommand("explain", "Render an explanation bundle for a solved task");
  std::string x_dir, x_task, x_format = "svg", x_out;
  int x_iter = -1;
  explain->add_option("run_dir", x_dir, "Run directory")->required();
  explain->add_option("--task", x_task, "Task id (as in solved.json)")->required();
  explain->add_option("--iter", x_iter, "Iteration to take the task from (default: latest that solved it)");
  explain->add_option("--format", x_format, "svg | ascii")->check(CLI::IsMember({"svg", "ascii"}))->capture_default_str();
  explain->add_option("--out", x_out, "Bundle directory (default: <run_dir>/explain/<task>)");

  // export-prompts
  auto* exportp = app.add_subcommand("export-prompts", "Write text prompts, one per line");
  std::string p_in, p_out;
  int p_length = 0;
  exportp->add_option("input", p_in, "Trajectory or task-set JSON")->required();
  exportp->add_option("--out", p_out, "Output file (.prompts.txt)")->required();
  exportp->add_option("--length", p_length, "Slice into sub-trajectories of this length first");

  // envs
  auto* envs = app.add_subcommand("envs", "List environment specifications");

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return 1;
  }

  try {
    if (*collect) {
      const EnvTag env = env_from_name(c_env);
      const auto trajs = collect_oracle_rollouts(env, c_episodes, c_seed, c_max_steps);
      write_json(c_out, trajectories_to_json(trajs));
      std::size_t steps = 0;
      for (const auto& t : trajs) steps += t.steps.size();
      out << "wrote " << trajs.size() << " trajectories (" << steps << " steps) to " << c_out << "\n";
      return 0;
    }

    if (*run) {
      RunConfig cfg = default_config(env_from_name(r_env), profile_from_name(r_profile));
      cfg.seed = r_seed;
      cfg.out_dir = r_out;
      cfg.jobs = r_jobs;
      if (*o_timeout) cfg.search_timeout_sec = r_timeout;
      if (*o_top_k) cfg.top_k = r_top_k;
      if (*o_corpus) cfg.corpus_size = r_corpus;
      if (*o_cands) cfg.max_candidates = r_max_candidates > 0 ? std::optional<std::uint64_t>(r_max_candidates) : std::nullopt;
      if (*o_tasks) cfg.max_tasks = r_max_tasks;
      if (*o_iters) cfg.max_iterations = r_max_iter;
      if (*o_oeps) cfg.oracle_episodes = r_oracle_eps;
      if (*o_eeps) cfg.eval_episodes = r_eval_eps;
      if (*o_osteps) cfg.oracle_max_steps = r_oracle_steps;
      if (*o_tmin) cfg.t_min = r_t_min;
      if (*o_tmax) cfg.t_max = r_t_max;
      if (*o_dmax) cfg.d_max = r_d_max;
      if (*o_P) cfg.P = r_P;
      if (*o_arity) cfg.max_arity = r_arity;
      if (cfg.t_min < 1 || cfg.t_max < cfg.t_min) throw FormatError("need 1 <= t-min <= t-max");
      if (cfg.d_max < 2) throw FormatError("d-max must be at least 2");
      if (cfg.search_timeout_sec <= 0) throw FormatError("timeout must be positive");

      const RunResult res = run_curriculum(cfg, [&](const IterationReport& r) {
        out << "iter " << r.iteration << ": L=" << r.length << " solveRate=" << fixed(r.solve_rate, 3) << " ("
            << r.solved_tasks.size() << "/" << r.n_tasks << ") library=" << r.library_size;
        if (!r.new_abstractions.empty()) {
          out << " new:";
          for (const auto& n : r.new_abstractions) out << " " << n;
        }
        out << " " << fixed(r.wall_time_sec, 1) << "s\n";
        out.flush();
      });
      out << (res.stopped_by_rule ? "stopped" : "iteration cap reached") << " after "
          << res.state.iteration << " iterations; final L=" << res.state.length << "; run written to "
          << r_out << "\n";
      return 0;
    }

    if (*eval) {
      const LoadedRun lr = load_run(e_dir);
      const std::string csv = eval_csv(evaluate_run(lr, e_jobs));
      const fs::path path = e_out.empty() ? fs::path(e_dir) / "eval.csv" : fs::path(e_out);
      write_text(path, csv);
      out << csv;
      return 0;
    }

    if (*library) {
      fs::path doc = fs::path(l_dir) / "library.json";
      if (l_iter >= 0) doc = fs::path(l_dir) / ("iter-" + std::to_string(l_iter)) / "library.json";
      const LoadedRun lr = load_run(l_dir);
      PrimTable table;
      const auto lib = library_from_json(read_json(doc), make_prim_table(lr.config.env), &table);
      out << library_report(lib);
      return 0;
    }

    if (*explain) {
      const LoadedRun lr = load_run(x_dir);
      const int last = latest_iteration(x_dir);
      for (int k = last; k >= 0; --k) {
        if (x_iter >= 0 && k != x_iter) continue;
        const fs::path iter = fs::path(x_dir) / ("iter-" + std::to_string(k));
        if (!fs::exists(iter / "solved.json")) continue;
        PrimTable table;
        const auto lib = library_from_json(read_json(iter / "library.json"), make_prim_table(lr.config.env), &table);
        const auto solved = solved_from_json(read_json(iter / "solved.json"), table);
        const auto it = std::find_if(solved.begin(), solved.end(), [&](const SolvedTask& s) {
          return s.task_id == x_task && s.solved();
        });
        if (it == solved.end()) continue;
        const TaskSet tasks = taskset_from_json(read_json(iter / "tasks.json"));
        const Trajectory& task = tasks.find(x_task);
        std::string safe = x_task;
        std::replace(safe.begin(), safe.end(), '@', '_');
        const fs::path dir = x_out.empty() ? fs::path(x_dir) / "explain" / safe : fs::path(x_out);
        write_bundle(dir, it->programs.front(), lib, task,
                     x_format == "svg" ? RenderFormat::Svg : RenderFormat::Ascii);
        out << "program  " << print_program(it->programs.front()) << "\n"
            << "expanded " << print_program(expand(it->programs.front(), lib)) << "\n"
            << "wrote " << task.steps.size() << " panels to " << dir.string() << "\n";
        return 0;
      }
      throw UnknownTaskId(x_task + " (no iteration solved it)");
    }

    if (*exportp) {
      const nlohmann::json doc = read_json(p_in);
      std::vector<Trajectory> trajs;
      if (doc.value("version", "") == kTaskSetSchema) {
        trajs = taskset_from_json(doc).tasks;
      } else {
        trajs = trajectories_from_json(doc);
      }
      if (p_length > 0) trajs = slice(trajs, p_length).tasks;
      std::string path = p_out;
      if (path.size() < 12 || path.substr(path.size() - 12) != ".prompts.txt") path += ".prompts.txt";
      std::string text;
      for (const auto& t : trajs) text += encode_prompt(t) + "\n";
      write_text(path, text);
      out << "wrote " << trajs.size() << " prompts to " << path << "\n";
      return 0;
    }

    if (*envs) {
      for (EnvTag tag : {EnvTag::Maze, EnvTag::Asterix, EnvTag::SpaceInvaders}) {
        const EnvSpec& s = env_spec(tag);
        out << env_name(tag) << "\n  request: " << s.request.str() << "\n  observation: " << s.height << "x"
            << s.width << (tag == EnvTag::Maze ? " (agent-aligned view) + direction" : "") << "\n  actions:";
        for (Action a : s.actions) out << " " << action_name(a);
        out << "\n  objects:";
        for (const auto& o : s.objects) out << " " << o.code << "=" << o.name;
        out << "\n  episode cap: " << s.max_steps << " steps\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace gridsynth
