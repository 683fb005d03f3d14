#pragma once

#include <string>
#include <string_view>

#include "gridsynth/term.hpp"

namespace gridsynth {

/// Builds the initial DSL of an environment: its actions, integer constants,
/// object constants and the perception/control primitives. Only the maze gets
/// direction constants and `eq-direction?`.
PrimTable make_prim_table(EnvTag env);

/// Creates an abstraction primitive from a closed body λ^arity. pattern. The
/// type is inferred from the body; throws TypeMismatch on ill-typed bodies.
PrimitivePtr make_abstraction(std::string name, TermPtr body);

/// The request type of programs for an environment:
/// map -> direction -> action for the maze and map -> action otherwise.
Type request_type(EnvTag env);

struct ParseOptions {
  /// Accept `$0`, `$1`, ... as references to the enclosing arguments of an
  /// abstraction body with this many slots (0 disables placeholders).
  int placeholder_slots = 0;
};

/// Parses S-expression program text. Accepts `λ` and `lambda`, multi-name
/// binders `(λ (x y) ...)` as sugar for nested lambdas, a bare top-level
/// `λ(x) body`, and redundant grouping parentheses around a single
/// expression. Bare action words (`left`, `no-op`) resolve to the matching
/// `<word>-action` primitive.
TermPtr parse_program(std::string_view text, const PrimTable& prims,
                      const ParseOptions& options = {});

/// Canonical text with binders named x, y, z, ... outermost-first.
std::string print_program(const TermPtr& term);

/// Prints an abstraction body (λ^arity. pattern) as its pattern with `$i`
/// placeholders for the arguments.
std::string print_abstraction_body(const TermPtr& body, int arity);
TermPtr parse_abstraction_body(std::string_view text, int arity, const PrimTable& prims);

/// Principal type of a closed term. Throws TypeMismatch or UnboundVariable.
Type infer_type(const TermPtr& term);
/// Type inference checked against an expected type.
void check_type(const TermPtr& term, const Type& expected);

/// EXEC(program, state): runs the program on a state and returns the action.
/// Throws OutOfBoundsGet or TypeMismatch.
Action exec(const TermPtr& program, const GridState& state);

}  // namespace gridsynth
