#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "gridsynth/term.hpp"
#include "json.hpp"

namespace gridsynth {

inline constexpr const char* kGrammarSchema = "gridsynth-grammar-v1";

/// Request types are curried functions from base types to a base type.
struct RequestShape {
  std::vector<BaseType> params;
  BaseType result = BaseType::Action;
};
/// Throws TypeMismatch when `request` is not of that form.
RequestShape request_shape(const Type& request);

/// One way to fill a hole of some base type.
struct Choice {
  enum class Kind : std::uint8_t { Production, Variable };
  Kind kind = Kind::Production;
  int index = 0;  // production index, or de Bruijn index for variables
  double logp = 0.0;
  std::vector<BaseType> args;
  int min_depth = 1;  // smallest subtree depth rooted at this choice
};

class Grammar;

/// Normalised choice sets for every base type under a fixed environment of
/// bound variables (listed outermost first).
class ChoiceTable {
 public:
  static constexpr int kUnreachable = 1 << 20;

  ChoiceTable(const Grammar& grammar, std::vector<BaseType> env);

  const std::vector<Choice>& at(BaseType t) const { return choices_[static_cast<int>(t)]; }
  int min_depth(BaseType t) const { return min_depth_[static_cast<int>(t)]; }
  const std::vector<BaseType>& env() const { return env_; }
  /// Position of the production / variable in at(t), or -1.
  int find_production(BaseType t, int production) const;
  int find_variable(BaseType t, int de_bruijn) const;
  /// Leaf term for a choice (primitive or variable).
  TermPtr head(const Choice& c) const;

 private:
  std::vector<BaseType> env_;
  std::array<std::vector<Choice>, kNumBaseTypes> choices_;
  std::array<int, kNumBaseTypes> min_depth_{};
  std::vector<TermPtr> prim_terms_;
};

/// Probabilistic grammar over a primitive table. Productions carry
/// unnormalised log weights; every choice point normalises over the
/// type-compatible productions plus the in-scope variables, which share the
/// mass exp(log_variable).
class Grammar {
 public:
  Grammar() = default;
  Grammar(PrimTable table, std::vector<double> log_weights, double log_variable);
  static Grammar uniform(PrimTable table);

  const PrimTable& table() const { return table_; }
  EnvTag env() const { return table_.env(); }
  const std::vector<double>& log_weights() const { return weights_; }
  double log_variable() const { return log_variable_; }
  /// Default request type of the environment.
  Type request() const;

  /// Adds a production (a learned abstraction) with the given log weight.
  Grammar with_production(PrimitivePtr p, double log_weight = 0.0) const;

  /// Cached, thread-safe.
  std::shared_ptr<const ChoiceTable> choices(const std::vector<BaseType>& env) const;

  /// Production candidates for a base request with their (ground) argument
  /// types; independent of the variable environment.
  struct Candidate {
    int production;
    std::vector<BaseType> args;
  };
  const std::vector<Candidate>& candidates(BaseType t) const {
    return candidates_[static_cast<int>(t)];
  }

 private:
  void build_candidates();

  PrimTable table_;
  std::vector<double> weights_;
  double log_variable_ = 0.0;
  std::array<std::vector<Candidate>, kNumBaseTypes> candidates_;
  struct Cache {
    std::mutex mutex;
    std::vector<std::pair<std::vector<BaseType>, std::shared_ptr<const ChoiceTable>>> tables;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct SampleConfig {
  int max_depth = 6;
  Type request;
  std::uint64_t seed = 0;
  /// Draws with more term nodes than this are discarded and redrawn.
  int max_nodes = 256;
};

/// Draws a well-typed closed program of `cfg.request` with depth <= max_depth
/// by type-directed descent, renormalising at each node over the choices that
/// still fit the remaining depth. Deterministic in the seed.
/// Throws DepthUnsatisfiable.
TermPtr sample_program(const Grammar& g, const SampleConfig& cfg);

/// Negative log probability (nats) of the derivation of `t`. When `request`
/// is not given the principal type of `t` is used; parameters it leaves
/// unconstrained are taken from the environment request. Throws NotDerivable.
double description_length(const Grammar& g, const TermPtr& t,
                           std::optional<Type> request = std::nullopt);

/// Laplace-smoothed (alpha = 1) usage-frequency refit over a solved corpus.
/// Every program is derived at the environment request type.
Grammar refit(const Grammar& g, std::span<const TermPtr> solved);

nlohmann::json grammar_to_json(const Grammar& g);
/// `table` must already contain every production named in the document
/// (load the library first).
Grammar grammar_from_json(const nlohmann::json& doc, const PrimTable& table);

}  // namespace gridsynth
