#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/grammar.hpp"
#include "gridsynth/term.hpp"
#include "json.hpp"

namespace gridsynth {

inline constexpr const char* kLibrarySchema = "gridsynth-library-v1";
inline constexpr int kMaxArity = 3;

/// A learned library function: a closed body λ^arity. pattern whose slots
/// are ordered by first use in the pattern.
struct Abstraction {
  std::string name;
  int arity = 0;
  Type type;
  TermPtr body;
  std::vector<std::string> children;  // abstractions referenced by the body
  int use_count = 0;
  PrimitivePtr prim;  // null for unnamed candidates
};

/// Anti-unifies pairs of same-headed subterms drawn from different corpus
/// programs (program variables become slots). Keeps candidates with at most
/// `max_arity` slots that match inside at least two distinct programs; the
/// returned use_count is that program count. `request` is the type of every
/// corpus program.
std::vector<Abstraction> propose_candidates(std::span<const TermPtr> corpus, const Type& request,
                                            int max_arity);

struct CompressionResult {
  Grammar grammar;
  std::vector<Abstraction> new_abstractions;
  std::map<std::string, TermPtr> rewritten;
  double dl_before = 0.0;
  double dl_after = 0.0;
};

/// Greedy MDL compression: repeatedly adds the candidate with the largest
/// positive saving (corpus DL before, minus corpus DL after rewriting plus
/// the body's own DL), until no candidate saves anything. New productions
/// enter with log weight 0.
CompressionResult compress(const std::map<std::string, TermPtr>& corpus, const Grammar& g,
                           int max_arity = kMaxArity, int jobs = 1);

/// Replaces every outermost match of the abstraction's pattern by a call.
TermPtr rewrite(const TermPtr& program, const Abstraction& a);

/// Inlines every abstraction and β-normalises. Throws UnknownAbstraction for
/// abstractions missing from `lib`.
TermPtr expand(const TermPtr& t, std::span<const Abstraction> lib);

/// Library view of a table's abstractions (children filled, use counts 0).
std::vector<Abstraction> library_of(const PrimTable& table);

/// Transitive use counts: a call of g contributes the uses inside g's body.
void count_uses(std::vector<Abstraction>& lib, std::span<const TermPtr> corpus);

nlohmann::json library_to_json(std::span<const Abstraction> lib);
/// Rebuilds the abstractions on top of `base` (which must not contain
/// them); returns the extended table in `table_out`.
std::vector<Abstraction> library_from_json(const nlohmann::json& doc, const PrimTable& base,
                                           PrimTable* table_out);

/// One function per line with its inlined expansion, then
/// "Number of extracted functions: N".
std::string library_report(std::span<const Abstraction> lib);

}  // namespace gridsynth
