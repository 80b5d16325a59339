#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ineq/goal.hpp"

namespace ineq {

struct Counterexample {
  Assignment assignment;
  double violation_margin = 0;
  double hypothesis_residual = 0;
  enum class Source { Cache, Optimizer, Smt } source = Source::Optimizer;
};

// Falsifying points found earlier, replayed against later goals before any
// heavier machinery runs. Keyed by variable-name set, most recent first.
// Concurrent append/lookup is safe; a missed fresh entry only costs time.
class TestCaseCache {
 public:
  void add(const std::vector<std::string>& vars, const Assignment& point);
  std::vector<Assignment> lookup(const std::vector<std::string>& vars) const;

  struct Stats {
    size_t entries = 0;
    size_t hits = 0;
    size_t lookups = 0;
  };
  Stats stats() const;
  void record_hit() const;

 private:
  mutable std::mutex mu_;
  mutable Stats stats_;
  std::map<std::string, std::vector<Assignment>> by_vars_;

  static std::string key_of(const std::vector<std::string>& vars);
};

struct OptimizerConfig {
  uint64_t seed = 1;
  int restarts = 8;
  int max_evaluations = 20000;
  int anneal_steps = 120;
  double feasibility_tol = 1e-6;
  double violation_tol = 1e-6;
  double strict_margin = 1e-4;  // box tightening for positive variables
  double budget_seconds = 5.0;
};

struct OptResult {
  std::optional<Counterexample> cex;
  bool budget_exhausted = false;
  int evaluations = 0;
};

// First cached point that is feasible for the goal and violates its
// conclusion beyond the tolerance.
std::optional<Counterexample> quick_check(const ProofGoal& goal, const TestCaseCache& cache,
                                          double feasibility_tol = 1e-6,
                                          double violation_tol = 1e-6);

// Minimizes conclusion slack subject to the hypotheses: exterior quadratic
// penalty, damped Newton inner loop, simulated-annealing restarts.
// Deterministic for a fixed seed.
OptResult optimize_violation(const ProofGoal& goal, const OptimizerConfig& config);

// Analytic gradient of the penalty objective at a point (exposed for the
// finite-difference cross-check).
std::vector<double> penalty_gradient(const ProofGoal& goal,
                                     const std::map<std::string, double>& point, double mu);
std::optional<double> penalty_value(const ProofGoal& goal,
                                    const std::map<std::string, double>& point, double mu);

// ---------------------------------------------------------------------------
// SMT-LIB bridge

enum class SmtVerdict { Sat, Unsat, Unknown, Unavailable };

struct SmtResult {
  SmtVerdict verdict = SmtVerdict::Unavailable;
  std::optional<Assignment> model;  // verified numerically before being returned
  std::string raw;                  // solver stdout, for diagnostics
};

struct SmtUnsupported : std::runtime_error {
  explicit SmtUnsupported(const std::string& m) : std::runtime_error(m) {}
};

// QF_NRA script asserting hypotheses and the negated conclusion. Square
// roots, fractional powers and divisions are eliminated with auxiliary
// variables. Throws SmtUnsupported for exp/log.
std::string emit_smtlib(const ProofGoal& goal);

// Runs `solver_cmd <file>` over the emitted script. Empty command or a spawn
// failure yields Unavailable; timeouts yield Unknown.
SmtResult smt_check(const ProofGoal& goal, const std::string& solver_cmd, double timeout_seconds);

// ---------------------------------------------------------------------------
// Pipeline

struct CexConfig {
  OptimizerConfig optimizer;
  std::string smt_solver;  // empty: no external solver
  double smt_timeout = 2.0;
  double budget_seconds = 5.0;
};

struct CexOutcome {
  std::optional<Counterexample> cex;
  bool smt_unsat_advisory = false;  // external solver reported unsat (advisory only)
  bool budget_exhausted = false;
};

// quick_check -> optimize_violation -> smt_check, stopping at the first
// refutation; fresh counterexamples are appended to the cache.
CexOutcome find_counterexample(const ProofGoal& goal, TestCaseCache& cache,
                               const CexConfig& config);

}  // namespace ineq
