#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ineq/goal.hpp"

namespace ineq {

// A directed, side-annotated inequality pattern. The trigger is matched
// against subterms of one side of a goal's conclusion (modulo associativity
// and commutativity of + and *, with a positive constant coefficient absorbed
// into the match); the bound replaces it. Dir::Upper means
// trigger <= bound under the side conditions.
struct ScalingLemma {
  enum class Side { Left, Right };
  enum class Dir { Upper, Lower };

  std::string name;
  std::vector<std::string> slots;
  ExprPtr trigger;
  ExprPtr bound;
  Side side = Side::Left;
  Dir dir = Dir::Upper;
  std::vector<Relation> side_conditions;
  std::string lean_name;
  bool cyclic = false;
};

struct LemmaError : std::runtime_error {
  explicit LemmaError(const std::string& m) : std::runtime_error(m) {}
};
struct DirectionMismatch : std::runtime_error {
  DirectionMismatch() : std::runtime_error("lemma direction incompatible with goal relation") {}
};
struct IllFormedResult : std::runtime_error {
  IllFormedResult() : std::runtime_error("scaling produced an undefined goal") {}
};

// Sampled soundness: random slot assignments satisfying the side conditions
// must respect the declared direction. Returns false and fills `why` on a
// violation.
bool check_lemma_soundness(const ScalingLemma& lemma, uint64_t seed, int samples,
                           std::string* why);

// Stanza format, one lemma per blank-line-separated block, '#' comments:
//   name=am_gm_mul_left_2vars
//   args=u,v
//   trigger=u*v
//   bound=(u^2+v^2)/2
//   side=left            # left|right
//   dir=upper            # upper|lower
//   cond=u>=0,v>=0       # optional
//   lean_name=NEQ_AM_GM_left_2vars
//   cyclic=true          # optional
std::vector<ScalingLemma> parse_lemma_library(const std::string& text);

// Parses and runs the load-time soundness sampling; any failure aborts the
// load with LemmaError.
std::vector<ScalingLemma> load_lemma_library(const std::string& path);

std::string default_lemma_path();

struct MatchOptions {
  // 0: structural matches only.
  // 1: plus trivial factor splits (u:=1) and constant square roots.
  // 2: plus square-root solving of arbitrary nonnegative subterms.
  int decomposition_level = 1;
  size_t max_matches = 256;
  int condition_samples = 24;
  uint64_t seed = 0x51ab5eed;
};

struct Substitution {
  std::map<std::string, ExprPtr> bindings;
  std::string position;   // stable location key within the matched side
  Rat absorbed_coeff{1};  // the k of k*(trigger) + rest
  ExprPtr matched;        // consumed subterm, k excluded
  Relation new_conclusion;  // conclusion after this single application
};

// Enumerates substitutions of the trigger into the declared side of the
// conclusion at polarity-compatible positions. Deterministic; duplicates
// (e.g. slot swaps of a symmetric trigger) are removed.
std::vector<Substitution> match_lemma(const ScalingLemma& lemma, const ProofGoal& goal,
                                      const MatchOptions& opts = {});

// Wraps the substitution into a child goal; hypotheses carry over unchanged.
ProofGoal apply_scaling(const ProofGoal& goal, const ScalingLemma& lemma, const Substitution& s);

// Applies `s` and, for lemmas flagged cyclic, chases the images of `s` under
// the cyclic permutation of the goal's variables, applying each in turn.
// Returns the final goal plus one (lemma name, substitution) record per
// constituent application.
struct ScalingStep {
  std::string lemma_name;
  Substitution sub;
};
std::pair<ProofGoal, std::vector<ScalingStep>> apply_scaling_bundled(
    const ProofGoal& goal, const ScalingLemma& lemma, const Substitution& s,
    const MatchOptions& opts = {});

// Slot permutations that leave the trigger canonically invariant (e.g. u<->v
// for u*v). Used to expand canonical matches into their symmetric images.
std::vector<std::map<std::string, std::string>> trigger_symmetries(const ScalingLemma& lemma);

}  // namespace ineq
