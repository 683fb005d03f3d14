#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/envs.hpp"
#include "gridsynth/grammar.hpp"
#include "gridsynth/term.hpp"
#include "json.hpp"

namespace gridsynth {

inline constexpr const char* kTrajectorySchema = "gridsynth-trajectories-v1";
inline constexpr const char* kTaskSetSchema = "gridsynth-taskset-v1";

struct Step {
  GridState state;
  Action action = Action::NoOp;
  friend bool operator==(const Step&, const Step&) = default;
};

/// An ordered list of (state, action) pairs from one episode, or a window of
/// one. `source` is "oracle" or "program:<text>".
struct Trajectory {
  std::string id;
  EnvTag env = EnvTag::Maze;
  std::string source = "oracle";
  EpisodeSeed seed;
  int offset = 0;  // first step within the source trajectory
  std::vector<Step> steps;
};

struct TaskSet {
  EnvTag env = EnvTag::Maze;
  int length = 0;
  std::vector<Trajectory> tasks;

  /// Throws UnknownTaskId.
  const Trajectory& find(const std::string& id) const;
};

struct RolloutParams {
  int t_min = 5;
  int t_max = 60;
  int warmup_max = 0;  // oracle prefix, MinAtar only
  int d_max = 6;
};

RolloutParams default_rollout_params(EnvTag env);

/// Samples `count` programs and records their behavior in seeded episodes for
/// t ~ U[t_min, t_max] steps (after a random-length oracle warmup for the
/// MinAtar games). Episodes that end early, or a program that fails to
/// evaluate, truncate the rollout; programs failing on their first state are
/// resampled.
std::vector<Trajectory> collect_program_rollouts(const Grammar& g, EnvTag env, int count,
                                                 const RolloutParams& params, std::uint64_t seed);

/// Oracle episodes run until the episode ends or `max_steps` (0 = spec cap).
std::vector<Trajectory> collect_oracle_rollouts(EnvTag env, int episodes, std::uint64_t seed,
                                                int max_steps = 0);

/// Non-overlapping consecutive windows of length L; short tails are dropped.
/// Window ids are "<source id>@<offset>".
TaskSet slice(std::span<const Trajectory> trajs, int L);

/// True iff the program reproduces every action; stops at the first mismatch
/// and folds evaluation errors into a mismatch.
bool imitates(const TermPtr& program, const Trajectory& task);

/// Fraction of tasks with at least one imitating program among the supplied
/// ones. Throws UnknownTaskId for ids absent from `tasks`.
double accuracy(const std::map<std::string, std::vector<TermPtr>>& solutions, const TaskSet& tasks,
                int jobs = 1);

/// Text prompt: per step the row-major grid digits, the direction digit for
/// the maze, a space, the action word; steps joined by single spaces.
/// Throws MultiDigitCode.
std::string encode_prompt(const Trajectory& t);

nlohmann::json step_to_json(const Step& s);
Step step_from_json(const nlohmann::json& j, EnvTag env);
nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json trajectories_to_json(std::span<const Trajectory> trajs);
std::vector<Trajectory> trajectories_from_json(const nlohmann::json& doc);
nlohmann::json taskset_to_json(const TaskSet& ts);
TaskSet taskset_from_json(const nlohmann::json& doc);

}  // namespace gridsynth
