#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ineq/expr.hpp"

namespace ineq {

enum class RelOp { Le, Lt, Ge, Gt, Eq };

const char* rel_op_str(RelOp op);

struct Relation {
  ExprPtr lhs;
  RelOp op;
  ExprPtr rhs;
};

std::string to_string(const Relation& r);
// "lhs <= rhs" | "<" | ">=" | ">" | "=". Throws ParseError.
Relation parse_relation(const std::string& text);

struct VarDecl {
  std::string name;
  bool positive = false;
};

// One node of the proof search: hypotheses plus a single conclusion.
struct ProofGoal {
  std::vector<VarDecl> vars;
  std::vector<Relation> hypotheses;
  Relation conclusion;

  int id = -1;
  int parent = -1;
  int depth = 0;
  std::string tactic_label;

  std::vector<std::string> var_names() const;
  bool is_positive(const std::string& name) const;
  ProofGoal child_with_conclusion(Relation c) const;
};

// Conclusion reoriented so that it reads lhs <= rhs (or <, or =); Ge/Gt swap
// sides. Used by matching, closure and violation checks.
Relation conclusion_as_le(const ProofGoal& g);

// rhs - lhs of the reoriented conclusion: >= 0 iff the goal holds
// (nullopt for equality conclusions).
std::optional<ExprPtr> conclusion_slack(const ProofGoal& g);

// Canonical identity of a goal, used for duplicate merging.
std::string goal_key(const ProofGoal& g);

// Conservative syntactic sign analysis using the goal's positivity flags:
// squares, square roots, exponentials, positive constants, and positive
// variables, closed under sums, products and quotients.
bool provably_nonneg(const ExprPtr& e, const ProofGoal& g);
bool provably_nonpos(const ExprPtr& e, const ProofGoal& g);
bool provably_positive(const ExprPtr& e, const ProofGoal& g);

struct Problem {
  std::string name;
  std::string source;
  ProofGoal goal;
};

// Line-oriented problem format:
//   # comment
//   name: Example_1d7
//   source: <free text>
//   vars: a > 0, b > 0, c > 0
//   assume: a*b*c = 1
//   prove: a + b + c <= a^2 + b^2 + c^2
Problem parse_problem(const std::string& text);
Problem load_problem(const std::string& path);

// --------------------------------------------------------------------------
// Feasible sampling shared by pruning, lemma soundness checks and rewrite
// validation.

struct SampleOptions {
  double min_magnitude = 1e-2;
  double max_magnitude = 1e2;
  double strict_margin = 1e-4;  // tightening for strict hypotheses
  int projection_iters = 60;
  int max_attempts_per_point = 64;
};

// max violation over hypotheses and positivity flags (0 when feasible).
double hypothesis_residual(const ProofGoal& g, const std::map<std::string, double>& point);

// Conclusion violation: positive when the conclusion fails at the point.
std::optional<double> conclusion_violation(const ProofGoal& g,
                                           const std::map<std::string, double>& point);

// Gauss-Newton projection onto the equality-hypothesis manifold.
bool restore_feasibility(const ProofGoal& g, std::map<std::string, double>& point,
                         const SampleOptions& opts = {});

// Up to n feasible points (may return fewer if the region is awkward).
std::vector<std::map<std::string, double>> sample_feasible(const ProofGoal& g, std::mt19937_64& rng,
                                                           int n,
                                                           const SampleOptions& opts = {});

}  // namespace ineq
