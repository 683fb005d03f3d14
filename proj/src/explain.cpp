#include "gridsynth/explain.hpp"

#include <cstdio>

#include "gridsynth/curriculum.hpp"
#include "gridsynth/dsl.hpp"
#include "gridsynth/eval.hpp"

namespace gridsynth {

namespace {

class ExplainTracer final : public Tracer {
 public:
  explicit ExplainTracer(StepExplanation& out) : out_(out) {}

  void on_cell_read(int x, int y) override {
    out_.highlighted.insert({x, y});
    ++out_.access_counts[{x, y}];
  }

  int begin_call(const Primitive& callee, std::span<const Value> args) override {
    TraceEvent e;
    std::vector<int>& siblings = stack_.empty() ? top_counter_ : children_[stack_.back()];
    if (siblings.empty()) siblings.push_back(0);
    const int n = ++siblings.front();
    e.label = stack_.empty() ? std::to_string(n) : out_.events[stack_.back()].label + "." + std::to_string(n);
    e.depth = static_cast<int>(stack_.size());
    e.callee = callee.name;
    e.abstraction = callee.is_abstraction();
    for (const auto& v : args) e.args.push_back(v.str());
    e.result = "<error>";
    if (callee.op == Op::Get && args.size() == 3) e.accessed_cell = Cell{args[1].i, args[2].i};
    out_.events.push_back(std::move(e));
    const int handle = static_cast<int>(out_.events.size()) - 1;
    children_.emplace_back();
    stack_.push_back(handle);
    return handle;
  }

  void on_branch(int handle, bool condition) override {
    out_.events[handle].branch = TraceEvent::Branch{condition, condition ? "then" : "else"};
  }

  void end_call(int handle, const Value& result) override {
    out_.events[handle].result = result.str();
    if (!stack_.empty() && stack_.back() == handle) stack_.pop_back();
  }

 private:
  StepExplanation& out_;
  std::vector<int> stack_;
  std::vector<int> top_counter_;
  std::vector<std::vector<int>> children_;  // per event: {count of child calls}
};

std::optional<Cell> agent_cell(const GridState& s, int x, int y) {
  if (s.env == EnvTag::Maze) {
    if (x == 0 && y == kMazeView / 2) return Cell{x, y};
    return std::nullopt;
  }
  if (s.at(x, y) == 1) return Cell{x, y};
  return std::nullopt;
}

char ascii_code(const GridState& s, int x, int y) {
  const int code = s.at(x, y);
  if (s.env == EnvTag::Maze) {
    switch (code) {
      case kMazeWall:
        return '#';
      case kMazeGoal:
        return 'G';
      default:
        return '.';
    }
  }
  if (s.env == EnvTag::Asterix) {
    static const char kCodes[] = {'.', 'A', 'g', 'e', '-'};
    return code < 5 ? kCodes[code] : '?';
  }
  static const char kCodes[] = {'.', 'A', 'a', '|', '!'};
  return code < 5 ? kCodes[code] : '?';
}

const char* svg_color(const GridState& s, int x, int y) {
  if (agent_cell(s, x, y)) return "#1f4e9c";
  const int code = s.at(x, y);
  if (s.env == EnvTag::Maze) {
    switch (code) {
      case kMazeWall:
        return "#808080";
      case kMazeGoal:
        return "#2ca02c";
      default:
        return "#000000";
    }
  }
  if (s.env == EnvTag::Asterix) {
    static const char* kColors[] = {"#000000", "#1f4e9c", "#ff7f0e", "#d62728", "#8c564b"};
    return code < 5 ? kColors[code] : "#000000";
  }
  static const char* kColors[] = {"#000000", "#1f4e9c", "#9467bd", "#17becf", "#e377c2"};
  return code < 5 ? kColors[code] : "#000000";
}

std::string heading_label(const GridState& s) {
  static const char* kNames[] = {"east", "south", "west", "north"};
  const int d = s.direction.value_or(0);
  return "direction " + std::to_string(d) + " (" + kNames[((d % 4) + 4) % 4] + ")";
}

std::string action_label(const StepExplanation& e) {
  if (e.chosen_action) return std::string(action_name(*e.chosen_action));
  return "error";
}

std::string render_ascii(const StepExplanation& e) {
  const GridState& s = e.state;
  std::string out;
  if (s.env == EnvTag::Maze) out += heading_label(s) + "\n";
  out += "action " + action_label(e) + "\n";
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      char c = ascii_code(s, x, y);
      if (agent_cell(s, x, y)) c = 'A';
      if (e.highlighted.count({x, y})) c = '*';
      out += c;
    }
    out += '\n';
  }
  return out;
}

std::string render_svg(const StepExplanation& e) {
  constexpr int kCell = 40;
  constexpr int kBand = 30;
  const GridState& s = e.state;
  const int w = s.width * kCell;
  const int h = s.height * kCell + kBand;
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                w, h, w, h);
  out += buf;
  std::string label = "action " + action_label(e);
  if (s.env == EnvTag::Maze) label = heading_label(s) + ", " + label;
  std::snprintf(buf, sizeof buf,
                "  <text x=\"4\" y=\"20\" font-family=\"monospace\" font-size=\"14\">%s</text>\n",
                label.c_str());
  out += buf;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      std::snprintf(buf, sizeof buf,
                    "  <rect class=\"cell\" x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" stroke=\"#404040\"/>\n",
                    x * kCell, kBand + y * kCell, kCell, kCell, svg_color(s, x, y));
      out += buf;
    }
  }
  for (const auto& [x, y] : e.highlighted) {
    std::snprintf(buf, sizeof buf,
                  "  <rect class=\"highlight\" data-x=\"%d\" data-y=\"%d\" x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#ffd400\" fill-opacity=\"0.6\"/>\n",
                  x, y, x * kCell, kBand + y * kCell, kCell, kCell);
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

StepExplanation trace_execution(const TermPtr& program, const GridState& state) {
  StepExplanation e;
  e.state = state;
  ExplainTracer tracer(e);
  EvalError err;
  const auto v = evaluate_program(program, state, &err, &tracer);
  if (v && v->kind == ValueKind::Action) {
    e.chosen_action = static_cast<Action>(v->i);
  } else if (v) {
    e.error = "TypeMismatch: program returned " + v->str() + " instead of an action";
  } else {
    e.error = (err.code == EvalErrorCode::OutOfBounds ? "OutOfBoundsGet: " : "TypeMismatch: ") + err.message;
  }
  return e;
}

std::string render(const StepExplanation& expl, RenderFormat format) {
  return format == RenderFormat::Svg ? render_svg(expl) : render_ascii(expl);
}

nlohmann::json explanation_to_json(const StepExplanation& expl) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& ev : expl.events) {
    nlohmann::json j = {{"label", ev.label},
                        {"depth", ev.depth},
                        {"callee", ev.callee},
                        {"abstraction", ev.abstraction},
                        {"args", ev.args},
                        {"result", ev.result}};
    if (ev.accessed_cell) j["accessedCell"] = {ev.accessed_cell->first, ev.accessed_cell->second};
    if (ev.branch) j["branch"] = {{"condition", ev.branch->condition}, {"taken", ev.branch->taken}};
    events.push_back(std::move(j));
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [cell, n] : expl.access_counts) cells.push_back({{"x", cell.first}, {"y", cell.second}, {"count", n}});
  nlohmann::json j = {{"state", step_to_json({expl.state, expl.chosen_action.value_or(Action::NoOp)}).at("grid")},
                      {"events", events},
                      {"highlightedCells", cells}};
  if (expl.state.direction) j["direction"] = *expl.state.direction;
  j["chosenAction"] = expl.chosen_action ? nlohmann::json(std::string(action_name(*expl.chosen_action)))
                                         : nlohmann::json(nullptr);
  if (expl.error) j["error"] = *expl.error;
  return j;
}

void write_bundle(const std::filesystem::path& dir, const TermPtr& program,
                  std::span<const Abstraction> lib, const Trajectory& task, RenderFormat format) {
  std::filesystem::create_directories(dir);
  nlohmann::json steps = nlohmann::json::array();
  nlohmann::json files = nlohmann::json::array();
  int agree = 0;
  for (std::size_t i = 0; i < task.steps.size(); ++i) {
    const StepExplanation e = trace_execution(program, task.steps[i].state);
    if (e.chosen_action && *e.chosen_action == task.steps[i].action) ++agree;
    nlohmann::json j = explanation_to_json(e);
    j["step"] = i;
    j["recordedAction"] = std::string(action_name(task.steps[i].action));
    steps.push_back(std::move(j));
    char name[32];
    std::snprintf(name, sizeof name, "step-%02zu.%s", i, format == RenderFormat::Svg ? "svg" : "txt");
    write_text(dir / name, render(e, format));
    files.push_back(name);
  }
  write_json(dir / "trace.json", {{"version", kExplanationSchema}, {"steps", steps}});
  write_json(dir / "manifest.json", {{"version", kExplanationSchema},
                                     {"taskId", task.id},
                                     {"envTag", std::string(env_name(task.env))},
                                     {"program", print_program(program)},
                                     {"expanded", print_program(expand(program, lib))},
                                     {"stepsImitated", agree},
                                     {"steps", task.steps.size()},
                                     {"files", files},
                                     {"trace", "trace.json"}});
}

}  // namespace gridsynth
