#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridsynth/enumerator.hpp"
#include "gridsynth/grammar.hpp"
#include "gridsynth/imitation.hpp"
#include "gridsynth/library.hpp"
#include "json.hpp"

namespace gridsynth {

inline constexpr const char* kRunSchema = "gridsynth-run-v1";
inline constexpr const char* kReportSchema = "gridsynth-report-v1";
inline constexpr double kAdvanceThreshold = 0.10;
inline constexpr int kInitialLength = 3;

enum class Profile { Desk, Paper };
std::string_view profile_name(Profile p);
/// Throws FormatError.
Profile profile_from_name(std::string_view name);

struct RunConfig {
  EnvTag env = EnvTag::Maze;
  Profile profile = Profile::Desk;
  int t_min = 5;
  int t_max = 60;
  int d_max = 6;
  int warmup_max = 0;
  /// Programs-per-task cap; bounds top_k.
  int P = 100;
  double search_timeout_sec = 30.0;
  int top_k = 5;
  std::optional<std::uint64_t> max_candidates;
  int corpus_size = 2000;
  int max_tasks = 0;  // per iteration, 0 = all
  int oracle_episodes = 3;
  int oracle_max_steps = 0;  // 0 = environment cap
  int eval_episodes = 3;
  int max_iterations = 8;
  int max_arity = kMaxArity;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string out_dir;

  SearchBudget budget() const;
  RolloutParams rollout_params() const;
};

/// Table defaults for the environment, scaled down for the desk profile.
RunConfig default_config(EnvTag env, Profile profile);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

struct HistoryEntry {
  int iteration = 0;
  int length = 0;
  double solve_rate = 0.0;
  int library_size = 0;
  double wall_time_sec = 0.0;
};

struct CurriculumState {
  int length = kInitialLength;
  int consecutive_fails = 0;
  int iteration = 0;
  std::vector<HistoryEntry> history;
};

struct IterationReport {
  int iteration = 0;
  int length = 0;
  double solve_rate = 0.0;
  int n_tasks = 0;
  std::vector<std::string> solved_tasks;
  std::vector<std::string> new_abstractions;
  int library_size = 0;
  std::string grammar_snapshot;
  double dl_before = 0.0;
  double dl_after = 0.0;
  double wall_time_sec = 0.0;
};

/// Advances L when the solve rate reaches the threshold (inclusive),
/// otherwise counts a failure; nullopt (stop) after two consecutive failures.
std::optional<CurriculumState> advance(const CurriculumState& cs, const IterationReport& report);

/// Mutable state carried between iterations.
struct RunContext {
  RunConfig config;
  std::vector<Trajectory> oracle;
  Grammar grammar;
  /// Best program per solved task across iterations, keyed "L<len>/<task>".
  std::map<std::string, TermPtr> frontier;
  /// Called after every compression with its input corpus and result.
  std::function<void(const std::map<std::string, TermPtr>&, const CompressionResult&)> on_compress;
};

/// Oracle data, a uniform grammar and an empty frontier.
RunContext make_context(const RunConfig& config);

/// One iteration at cs.length: sample and persist a fresh program corpus,
/// refit on the frontier, solve the sliced oracle tasks, compress the
/// frontier, persist the report. Artifacts go to `iter_dir` (when non-empty).
IterationReport run_iteration(const CurriculumState& cs, RunContext& ctx,
                              const std::filesystem::path& iter_dir);

struct RunResult {
  CurriculumState state;
  std::vector<IterationReport> reports;
  Grammar final_grammar;
  std::map<std::string, TermPtr> frontier;
  bool stopped_by_rule = false;
};

/// Runs the curriculum to its stop rule (or max_iterations), writing the run
/// directory when config.out_dir is set.
RunResult run_curriculum(const RunConfig& config,
                         const std::function<void(const IterationReport&)>& on_iteration = {},
                         RunContext* context_out = nullptr);

struct LoadedRun {
  RunConfig config;
  PrimTable table;
  std::vector<Abstraction> library;
  Grammar grammar;
  int max_length = kInitialLength;
};

/// Reads run.json, library.json and final_grammar.json.
LoadedRun load_run(const std::filesystem::path& dir);

struct EvalRow {
  int length = 0;
  double accuracy = 0.0;
  int n_tasks = 0;
};

/// Accuracy per sequence length on fresh oracle rollouts (seeds disjoint
/// from training), for L = 3 .. the longest length the run attempted.
std::vector<EvalRow> evaluate_run(const LoadedRun& run, int jobs);
std::string eval_csv(const std::vector<EvalRow>& rows);

void write_text(const std::filesystem::path& p, const std::string& text);
void write_json(const std::filesystem::path& p, const nlohmann::json& j);
std::string read_text(const std::filesystem::path& p);
nlohmann::json read_json(const std::filesystem::path& p);

}  // namespace gridsynth
