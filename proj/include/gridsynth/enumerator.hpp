#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/grammar.hpp"
#include "gridsynth/imitation.hpp"
#include "json.hpp"

namespace gridsynth {

inline constexpr const char* kSolvedSchema = "gridsynth-solved-v1";

struct SearchBudget {
  double timeout_sec = 30.0;
  int top_k = 5;
  /// Programs drawn from the stream per task; binds before the timeout for
  /// reproducible runs.
  std::optional<std::uint64_t> max_candidates;
  int max_depth = 64;
};

struct EnumeratedProgram {
  TermPtr term;
  double dl = 0.0;
  std::string text;
};

/// Best-first (A*) search over partial derivations. Programs come out in
/// non-decreasing description length; ties (DL equal at 1e-9 resolution) are
/// ordered by canonical printed text. Every term of the request type within
/// the depth bound is produced exactly once.
class Enumerator {
 public:
  Enumerator(const Grammar& g, const Type& request, int max_depth = 64);
  ~Enumerator();
  Enumerator(Enumerator&&) noexcept;
  Enumerator& operator=(Enumerator&&) noexcept;

  /// nullopt once the space is exhausted.
  std::optional<EnumeratedProgram> next();
  std::uint64_t yielded() const;
  std::size_t frontier_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Materialises the first programs of the stream (max_candidates, or until
/// the timeout or exhaustion).
std::vector<EnumeratedProgram> enumerate(const Grammar& g, const Type& request,
                                         const SearchBudget& budget);

struct SolvedTask {
  std::string task_id;
  std::vector<TermPtr> programs;  // ascending DL, ties by printed text
  std::vector<double> dl;
  std::uint64_t candidates_tried = 0;
  double wall_time_sec = 0.0;

  bool solved() const { return !programs.empty(); }
};

SolvedTask solve_task(const Grammar& g, const Trajectory& task, const SearchBudget& budget);

/// Solves many tasks against one shared enumeration stream. Each task sees
/// the stream in the same order as a sequential solve, so the result does not
/// depend on `jobs` (unless the timeout fires). Identical tasks are solved
/// once. Results are in input order.
std::vector<SolvedTask> solve_tasks(const Grammar& g, std::span<const Trajectory> tasks,
                                    const SearchBudget& budget, int jobs = 1);

/// {taskId, programs, dlNats, candidatesTried}; wall time is kept out so the
/// document is reproducible.
nlohmann::json solved_to_json(std::span<const SolvedTask> solved);
/// Per-task wall times.
nlohmann::json timings_to_json(std::span<const SolvedTask> solved);
std::vector<SolvedTask> solved_from_json(const nlohmann::json& doc, const PrimTable& prims);

}  // namespace gridsynth
