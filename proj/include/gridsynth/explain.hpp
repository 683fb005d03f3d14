#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridsynth/imitation.hpp"
#include "gridsynth/library.hpp"
#include "json.hpp"

namespace gridsynth {

inline constexpr const char* kExplanationSchema = "gridsynth-explanation-v1";

using Cell = std::pair<int, int>;  // (x, y)

struct TraceEvent {
  /// Position in the call tree: "3" for a top-level call, "3.1" for the
  /// first call made while evaluating call 3.
  std::string label;
  int depth = 0;
  std::string callee;
  bool abstraction = false;
  std::vector<std::string> args;
  std::string result;  // "<error>" when the call never returned
  std::optional<Cell> accessed_cell;
  struct Branch {
    bool condition;
    std::string taken;  // "then" or "else"
  };
  std::optional<Branch> branch;
};

struct StepExplanation {
  GridState state;
  std::optional<Action> chosen_action;
  std::vector<TraceEvent> events;  // evaluation order
  std::set<Cell> highlighted;
  std::map<Cell, int> access_counts;
  std::optional<std::string> error;
};

/// Runs the program with an instrumented evaluator. The chosen action equals
/// exec's; evaluation errors leave a partial trace and set `error`.
StepExplanation trace_execution(const TermPtr& program, const GridState& state);

enum class RenderFormat { Ascii, Svg };

/// Pure function of the explanation.
std::string render(const StepExplanation& expl, RenderFormat format);

nlohmann::json explanation_to_json(const StepExplanation& expl);

/// Writes manifest.json, trace.json and one rendering per step
/// (step-NN.svg or step-NN.txt) into `dir`.
void write_bundle(const std::filesystem::path& dir, const TermPtr& program,
                  std::span<const Abstraction> lib, const Trajectory& task, RenderFormat format);

}  // namespace gridsynth
