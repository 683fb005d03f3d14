#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/term.hpp"

namespace gridsynth {

/// Closure over a lambda body, or a builtin/abstraction waiting for more
/// arguments.
struct FunctionValue {
  const Primitive* prim = nullptr;  // partial application when set
  TermPtr body;                     // closure body otherwise
  std::vector<Value> values;        // collected arguments or captured env
};

/// Observer for the instrumented evaluator. Calls are reported after their
/// arguments are evaluated; `if` reports only its condition as argument.
class Tracer {
 public:
  virtual ~Tracer() = default;
  virtual void on_cell_read(int /*x*/, int /*y*/) {}
  /// Returns a handle passed back to end_call.
  virtual int begin_call(const Primitive& /*callee*/, std::span<const Value> /*args*/) {
    return -1;
  }
  virtual void end_call(int /*handle*/, const Value& /*result*/) {}
  virtual void on_branch(int /*handle*/, bool /*condition*/) {}
};

enum class EvalErrorCode { None, OutOfBounds, TypeMismatch };

struct EvalError {
  EvalErrorCode code = EvalErrorCode::None;
  std::string message;
};

/// Applies the program to the state (map, then direction when the program
/// takes two arguments) and evaluates it. Returns nullopt and fills `error` on
/// failure; never throws for evaluation errors.
std::optional<Value> evaluate_program(const TermPtr& program, const GridState& state,
                                      EvalError* error = nullptr, Tracer* tracer = nullptr);

/// Non-throwing EXEC used on hot paths; nullopt on any evaluation error or a
/// non-action result.
std::optional<Action> try_exec(const TermPtr& program, const GridState& state);

}  // namespace gridsynth
