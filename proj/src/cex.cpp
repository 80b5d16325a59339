#include "ineq/cex.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ineq {

std::string TestCaseCache::key_of(const std::vector<std::string>& vars) {
  std::vector<std::string> sorted = vars;
  std::sort(sorted.begin(), sorted.end());
  std::string key;
  for (const auto& v : sorted) key += v + ",";
  return key;
}

void TestCaseCache::add(const std::vector<std::string>& vars, const Assignment& point) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& list = by_vars_[key_of(vars)];
  list.insert(list.begin(), point);
  ++stats_.entries;
}

std::vector<Assignment> TestCaseCache::lookup(const std::vector<std::string>& vars) const {
  std::lock_guard<std::mutex> lock(mu_);
  ++stats_.lookups;
  auto it = by_vars_.find(key_of(vars));
  if (it == by_vars_.end()) return {};
  return it->second;
}

TestCaseCache::Stats TestCaseCache::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

void TestCaseCache::record_hit() const {
  std::lock_guard<std::mutex> lock(mu_);
  ++stats_.hits;
}

std::optional<Counterexample> quick_check(const ProofGoal& goal, const TestCaseCache& cache,
                                          double feasibility_tol, double violation_tol) {
  for (const auto& point : cache.lookup(goal.var_names())) {
    double resid = hypothesis_residual(goal, point.vals);
    if (!(resid <= feasibility_tol)) continue;
    auto viol = conclusion_violation(goal, point.vals);
    if (!viol || !(*viol > violation_tol)) continue;
    cache.record_hit();
    Counterexample cex;
    cex.assignment = point;
    cex.violation_margin = *viol;
    cex.hypothesis_residual = resid;
    cex.source = Counterexample::Source::Cache;
    return cex;
  }
  return std::nullopt;
}

CexOutcome find_counterexample(const ProofGoal& goal, TestCaseCache& cache,
                               const CexConfig& config) {
  using clock = std::chrono::steady_clock;
  auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  CexOutcome out;
  if (auto hit = quick_check(goal, cache, config.optimizer.feasibility_tol,
                             config.optimizer.violation_tol)) {
    out.cex = hit;
    return out;
  }

  OptimizerConfig opt = config.optimizer;
  opt.budget_seconds = std::max(0.1, config.budget_seconds - elapsed());
  OptResult r = optimize_violation(goal, opt);
  out.budget_exhausted = r.budget_exhausted;
  if (r.cex) {
    cache.add(goal.var_names(), r.cex->assignment);
    out.cex = r.cex;
    return out;
  }

  if (!config.smt_solver.empty() && elapsed() < config.budget_seconds) {
    double left = std::min(config.smt_timeout, config.budget_seconds - elapsed());
    SmtResult s = smt_check(goal, config.smt_solver, left);
    if (s.verdict == SmtVerdict::Sat && s.model) {
      Counterexample cex;
      cex.assignment = *s.model;
      cex.hypothesis_residual = hypothesis_residual(goal, s.model->vals);
      auto viol = conclusion_violation(goal, s.model->vals);
      cex.violation_margin = viol.value_or(0);
      cex.source = Counterexample::Source::Smt;
      cache.add(goal.var_names(), cex.assignment);
      out.cex = cex;
      return out;
    }
    if (s.verdict == SmtVerdict::Unsat) out.smt_unsat_advisory = true;
  }
  return out;
}

}  // namespace ineq
