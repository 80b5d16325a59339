#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "ineq/cex.hpp"
#include "small_linalg.hpp"

namespace ineq {

namespace {

// Penalized objective: conclusion slack plus quadratic hypothesis penalty.
// Positivity flags are handled as box constraints, not penalties.
struct PenaltyProblem {
  std::vector<std::string> vars;
  std::vector<bool> positive;
  ExprPtr slack;                    // minimized; negative = conclusion violated
  std::vector<ExprPtr> eq;          // == 0
  std::vector<ExprPtr> ge;          // >= 0
  std::vector<ExprPtr> slack_grad;
  std::vector<std::vector<ExprPtr>> eq_grad, ge_grad;

  explicit PenaltyProblem(const ProofGoal& goal, double strict_margin) {
    for (const auto& v : goal.vars) {
      vars.push_back(v.name);
      positive.push_back(v.positive);
    }
    Relation le = conclusion_as_le(goal);
    if (le.op == RelOp::Eq) {
      // Falsifying an equality means driving (l-r)^2 away from zero.
      ExprPtr d = sub(le.lhs, le.rhs);
      slack = neg(mul(d, d));
    } else {
      slack = sub(le.rhs, le.lhs);
    }
    for (const auto& h : goal.hypotheses) {
      ExprPtr d = sub(h.lhs, h.rhs);
      switch (h.op) {
        case RelOp::Eq: eq.push_back(d); break;
        case RelOp::Le: ge.push_back(neg(d)); break;
        case RelOp::Ge: ge.push_back(d); break;
        case RelOp::Lt: ge.push_back(sub(neg(d), constant(Rat(1, 10000)))); break;
        case RelOp::Gt: ge.push_back(sub(d, constant(Rat(1, 10000)))); break;
      }
    }
    (void)strict_margin;
    for (const auto& v : vars) slack_grad.push_back(derivative(slack, v));
    for (const auto& e : eq) {
      std::vector<ExprPtr> g;
      for (const auto& v : vars) g.push_back(derivative(e, v));
      eq_grad.push_back(std::move(g));
    }
    for (const auto& e : ge) {
      std::vector<ExprPtr> g;
      for (const auto& v : vars) g.push_back(derivative(e, v));
      ge_grad.push_back(std::move(g));
    }
  }

  std::optional<double> value(const std::map<std::string, double>& pt, double mu) const {
    auto s = evaluate(slack, pt);
    if (!s) return std::nullopt;
    double p = *s;
    for (const auto& e : eq) {
      auto v = evaluate(e, pt);
      if (!v) return std::nullopt;
      p += mu * *v * *v;
    }
    for (const auto& e : ge) {
      auto v = evaluate(e, pt);
      if (!v) return std::nullopt;
      double d = std::min(0.0, *v);
      p += mu * d * d;
    }
    return p;
  }

  std::optional<std::vector<double>> gradient(const std::map<std::string, double>& pt,
                                              double mu) const {
    std::vector<double> g(vars.size(), 0.0);
    for (size_t j = 0; j < vars.size(); ++j) {
      auto v = evaluate(slack_grad[j], pt);
      if (!v) return std::nullopt;
      g[j] = *v;
    }
    for (size_t i = 0; i < eq.size(); ++i) {
      auto ev = evaluate(eq[i], pt);
      if (!ev) return std::nullopt;
      for (size_t j = 0; j < vars.size(); ++j) {
        auto dv = evaluate(eq_grad[i][j], pt);
        if (!dv) return std::nullopt;
        g[j] += mu * 2.0 * *ev * *dv;
      }
    }
    for (size_t i = 0; i < ge.size(); ++i) {
      auto ev = evaluate(ge[i], pt);
      if (!ev) return std::nullopt;
      double d = std::min(0.0, *ev);
      if (d == 0.0) continue;
      for (size_t j = 0; j < vars.size(); ++j) {
        auto dv = evaluate(ge_grad[i][j], pt);
        if (!dv) return std::nullopt;
        g[j] += mu * 2.0 * d * *dv;
      }
    }
    return g;
  }
};

}  // namespace

std::optional<double> penalty_value(const ProofGoal& goal,
                                    const std::map<std::string, double>& point, double mu) {
  PenaltyProblem p(goal, 1e-4);
  return p.value(point, mu);
}

std::vector<double> penalty_gradient(const ProofGoal& goal,
                                     const std::map<std::string, double>& point, double mu) {
  PenaltyProblem p(goal, 1e-4);
  auto g = p.gradient(point, mu);
  if (!g) return {};
  return *g;
}

OptResult optimize_violation(const ProofGoal& goal, const OptimizerConfig& config) {
  using clock = std::chrono::steady_clock;
  auto start = clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  OptResult result;
  PenaltyProblem prob(goal, config.strict_margin);
  const size_t n = prob.vars.size();
  if (n == 0) {
    // Ground conclusion: evaluate once.
    std::map<std::string, double> pt;
    auto viol = conclusion_violation(goal, pt);
    if (viol && *viol > config.violation_tol) {
      Counterexample cex;
      cex.assignment = Assignment{};
      cex.violation_margin = *viol;
      cex.hypothesis_residual = 0;
      result.cex = cex;
    }
    return result;
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> mag(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto random_point = [&]() {
    std::map<std::string, double> pt;
    for (size_t i = 0; i < n; ++i) {
      double x = std::pow(10.0, mag(rng));
      if (!prob.positive[i] && unit(rng) < 0.5) x = -x;
      pt[prob.vars[i]] = x;
    }
    return pt;
  };
  auto clamp_box = [&](std::map<std::string, double>& pt) {
    for (size_t i = 0; i < n; ++i)
      if (prob.positive[i]) pt[prob.vars[i]] = std::max(pt[prob.vars[i]], config.strict_margin);
  };

  auto eval_penalty = [&](const std::map<std::string, double>& pt,
                          double mu) -> std::optional<double> {
    ++result.evaluations;
    return prob.value(pt, mu);
  };

  // Finalize: project onto the equality manifold and re-verify strictly.
  auto finalize = [&](std::map<std::string, double> pt) -> std::optional<Counterexample> {
    if (!restore_feasibility(goal, pt)) return std::nullopt;
    clamp_box(pt);
    if (!restore_feasibility(goal, pt)) return std::nullopt;
    double resid = hypothesis_residual(goal, pt);
    if (!(resid <= config.feasibility_tol)) return std::nullopt;
    auto viol = conclusion_violation(goal, pt);
    if (!viol || !(*viol > config.violation_tol)) return std::nullopt;
    Counterexample cex;
    cex.assignment = Assignment::from_doubles(pt);
    cex.violation_margin = *viol;
    cex.hypothesis_residual = resid;
    cex.source = Counterexample::Source::Optimizer;
    return cex;
  };

  // Temperature scale from the initial objective spread.
  std::vector<double> probe_vals;
  for (int i = 0; i < 12; ++i) {
    auto pt = random_point();
    clamp_box(pt);
    if (auto v = eval_penalty(pt, 1e2)) probe_vals.push_back(std::fabs(*v));
  }
  double t0 = 1.0;
  if (!probe_vals.empty()) {
    double mean = 0;
    for (double v : probe_vals) mean += v;
    mean /= probe_vals.size();
    double var = 0;
    for (double v : probe_vals) var += (v - mean) * (v - mean);
    t0 = std::max(1e-3, std::sqrt(var / probe_vals.size()));
  }

  auto newton_polish = [&](std::map<std::string, double>& pt, double mu) {
    double lambda = 1e-6;
    for (int iter = 0; iter < 12; ++iter) {
      if (result.evaluations >= config.max_evaluations) return;
      auto g = prob.gradient(pt, mu);
      if (!g) return;
      double gnorm = 0;
      for (double v : *g) gnorm = std::max(gnorm, std::fabs(v));
      if (gnorm < 1e-12) return;
      // Hessian by forward differences of the analytic gradient.
      std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
      bool ok = true;
      for (size_t i = 0; i < n && ok; ++i) {
        double h = 1e-6 * std::max(1.0, std::fabs(pt[prob.vars[i]]));
        auto shifted = pt;
        shifted[prob.vars[i]] += h;
        auto g2 = prob.gradient(shifted, mu);
        if (!g2) {
          ok = false;
          break;
        }
        for (size_t j = 0; j < n; ++j) H[i][j] = ((*g2)[j] - (*g)[j]) / h;
      }
      if (!ok) return;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
          double s = 0.5 * (H[i][j] + H[j][i]);
          H[i][j] = H[j][i] = s;
        }
      auto cur = eval_penalty(pt, mu);
      if (!cur) return;
      bool stepped = false;
      for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
        auto A = H;
        for (size_t i = 0; i < n; ++i) A[i][i] += lambda;
        std::vector<double> rhs(n);
        for (size_t i = 0; i < n; ++i) rhs[i] = -(*g)[i];
        auto step = solve_linear(A, rhs);
        if (!step) {
          lambda *= 10;
          continue;
        }
        auto trial = pt;
        for (size_t i = 0; i < n; ++i) trial[prob.vars[i]] += (*step)[i];
        clamp_box(trial);
        auto tv = eval_penalty(trial, mu);
        if (tv && *tv < *cur - 1e-15) {
          pt = trial;
          lambda = std::max(1e-9, lambda * 0.3);
          stepped = true;
        } else {
          lambda *= 10;
        }
      }
      if (!stepped) return;
    }
  };

  std::optional<std::pair<double, std::map<std::string, double>>> best;  // by slack value

  auto consider = [&](const std::map<std::string, double>& pt) {
    auto s = evaluate(prob.slack, pt);
    if (!s) return;
    double resid = hypothesis_residual(goal, pt);
    double score = *s + 10.0 * resid;
    if (!best || score < best->first) best = {score, pt};
  };

  for (int restart = 0; restart < config.restarts; ++restart) {
    if (result.evaluations >= config.max_evaluations || seconds() > config.budget_seconds) {
      result.budget_exhausted = true;
      break;
    }
    double mu = 1e2 * std::pow(10.0, std::min(restart, 6));
    auto pt = random_point();
    clamp_box(pt);
    restore_feasibility(goal, pt);
    clamp_box(pt);
    auto cur = eval_penalty(pt, mu);
    int tries = 0;
    while (!cur && tries++ < 16) {
      pt = random_point();
      clamp_box(pt);
      cur = eval_penalty(pt, mu);
    }
    if (!cur) continue;

    double temperature = t0;
    for (int step = 0; step < config.anneal_steps; ++step) {
      if (result.evaluations >= config.max_evaluations) {
        result.budget_exhausted = true;
        break;
      }
      auto proposal = pt;
      for (size_t i = 0; i < n; ++i) {
        double scale =
            0.3 * std::max(0.05, std::fabs(pt[prob.vars[i]])) * (0.2 + temperature / (t0 + 1e-12));
        proposal[prob.vars[i]] += scale * gauss(rng);
      }
      clamp_box(proposal);
      auto pv = eval_penalty(proposal, mu);
      if (pv && (*pv < *cur || unit(rng) < std::exp((*cur - *pv) / std::max(temperature, 1e-9)))) {
        pt = proposal;
        cur = pv;
      }
      temperature *= 0.85;
      if (step % 20 == 19) {
        newton_polish(pt, mu);
        cur = eval_penalty(pt, mu);
        if (!cur) break;
      }
      consider(pt);
      // Early exit: the point already violates clearly.
      auto s = evaluate(prob.slack, pt);
      if (s && *s < -8 * config.violation_tol && hypothesis_residual(goal, pt) < 1e-3) {
        if (auto cex = finalize(pt)) {
          result.cex = cex;
          return result;
        }
      }
    }
    newton_polish(pt, mu);
    consider(pt);
    if (auto cex = finalize(pt)) {
      result.cex = cex;
      return result;
    }
  }

  if (best) {
    if (auto cex = finalize(best->second)) result.cex = cex;
  }
  if (result.evaluations >= config.max_evaluations) result.budget_exhausted = true;
  return result;
}

}  // namespace ineq
