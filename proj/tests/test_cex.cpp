#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "ineq/cex.hpp"

using namespace ineq;

namespace {

ProofGoal overscaled_goal() {
  return parse_problem(
             "vars: a > 0, b > 0, c > 0\n"
             "assume: a^2 + b^2 + c^2 = 1\n"
             "prove: 1/(2*sqrt(2)*a) + 1/(2*sqrt(2)*b) + 1/(2*sqrt(2)*c) <= "
             "1/(6*a*b+c^2) + 1/(6*b*c+a^2) + 1/(6*c*a+b^2)\n")
      .goal;
}

ProofGoal scaled_goal() {
  return parse_problem(
             "vars: a > 0, b > 0, c > 0\n"
             "assume: a^2 + b^2 + c^2 = 1\n"
             "prove: 1/(a^2+2) + 1/(b^2+2) + 1/(c^2+2) <= "
             "1/(3*a^2+3*b^2+c^2) + 1/(3*b^2+3*c^2+a^2) + 1/(3*a^2+3*c^2+b^2)\n")
      .goal;
}

Assignment symmetric_point() {
  double s = std::sqrt(3.0) / 3.0;
  return Assignment::from_doubles({{"a", s}, {"b", s}, {"c", s}});
}

// Writes an executable shell script and returns its path.
std::string fake_solver(const std::string& dir, const std::string& name,
                        const std::string& body) {
  std::string path = dir + "/" + name;
  std::ofstream out(path);
  out << "#!/bin/sh\n" << body;
  out.close();
  std::string cmd = "chmod +x " + path;
  REQUIRE(std::system(cmd.c_str()) == 0);
  return path;
}

}  // namespace

TEST_CASE("grid oracle confirms the violation region of the overscaled goal") {
  // Independent of the optimizer: scan the constraint sphere directly.
  ProofGoal g = overscaled_goal();
  double best = -1;
  for (double a = 0.05; a < 1.0; a += 0.05) {
    for (double b = 0.05; b < 1.0; b += 0.05) {
      double cc = 1.0 - a * a - b * b;
      if (cc < 1e-4) continue;
      std::map<std::string, double> pt{{"a", a}, {"b", b}, {"c", std::sqrt(cc)}};
      auto v = conclusion_violation(g, pt);
      if (v) best = std::max(best, *v);
    }
  }
  CHECK(best > 0.01);
}

TEST_CASE("quick_check replays the stored symmetric point") {
  TestCaseCache cache;
  ProofGoal bad = overscaled_goal();
  CHECK_FALSE(quick_check(bad, cache).has_value());  // empty cache

  cache.add(bad.var_names(), symmetric_point());
  auto hit = quick_check(bad, cache);
  REQUIRE(hit.has_value());
  CHECK(hit->hypothesis_residual < 1e-6);
  CHECK(hit->violation_margin > 1e-6);
  CHECK(hit->source == Counterexample::Source::Cache);

  // The properly scaled goal is satisfied at the same point.
  CHECK_FALSE(quick_check(scaled_goal(), cache).has_value());
}

TEST_CASE("optimizer refutes the overscaled goal within 2000 evaluations") {
  OptimizerConfig cfg;
  cfg.seed = 7;
  cfg.max_evaluations = 2000;
  OptResult r = optimize_violation(overscaled_goal(), cfg);
  REQUIRE(r.cex.has_value());
  CHECK(r.cex->violation_margin > 0.01);
  CHECK(r.cex->hypothesis_residual < 1e-6);
  CHECK(r.evaluations <= 2000);
}

TEST_CASE("optimizer finds nothing on a sum-of-squares identity") {
  ProofGoal g = parse_problem("vars: a, b\nprove: 2*a*b <= a^2 + b^2\n").goal;
  OptimizerConfig cfg;
  cfg.seed = 3;
  cfg.max_evaluations = 4000;
  OptResult r = optimize_violation(g, cfg);
  CHECK_FALSE(r.cex.has_value());
}

TEST_CASE("constant violation is found immediately") {
  ProofGoal g = parse_problem("vars: x\nprove: 0 <= -1\n").goal;
  OptimizerConfig cfg;
  cfg.seed = 1;
  OptResult r = optimize_violation(g, cfg);
  REQUIRE(r.cex.has_value());
  CHECK(r.cex->violation_margin == doctest::Approx(1.0));
}

TEST_CASE("analytic penalty gradient matches central differences") {
  std::mt19937_64 rng(23);
  SampleOptions opts;
  opts.min_magnitude = 0.05;  // keep the difference quotient away from the poles
  for (const ProofGoal& g : {overscaled_goal(), scaled_goal()}) {
    auto pts = sample_feasible(g, rng, 100, opts);
    REQUIRE(pts.size() >= 50);
    int compared = 0;
    for (const auto& pt : pts) {
      auto grad = penalty_gradient(g, pt, 1e3);
      if (grad.empty()) continue;
      size_t j = 0;
      for (const auto& v : g.var_names()) {
        double h = 1e-6 * std::max(0.01, std::fabs(pt.at(v)));
        auto lo = pt, hi = pt;
        lo[v] -= h;
        hi[v] += h;
        auto flo = penalty_value(g, lo, 1e3);
        auto fhi = penalty_value(g, hi, 1e3);
        if (flo && fhi) {
          double fd = (*fhi - *flo) / (2 * h);
          double scale = std::max({1.0, std::fabs(fd), std::fabs(grad[j])});
          CHECK(std::fabs(fd - grad[j]) <= 1e-4 * scale);
          ++compared;
        }
        ++j;
      }
    }
    CHECK(compared >= 100);
  }
}

TEST_CASE("fixed seed gives identical optimizer verdicts and points") {
  OptimizerConfig cfg;
  cfg.seed = 99;
  cfg.max_evaluations = 3000;
  auto r1 = optimize_violation(overscaled_goal(), cfg);
  auto r2 = optimize_violation(overscaled_goal(), cfg);
  REQUIRE(r1.cex.has_value());
  REQUIRE(r2.cex.has_value());
  CHECK(r1.evaluations == r2.evaluations);
  for (const auto& [k, v] : r1.cex->assignment.vals) {
    bool bit_identical = v == r2.cex->assignment.vals.at(k);
    CHECK(bit_identical);
  }
}

TEST_CASE("cache transparency: warm and cold verdicts agree on the fixture corpus") {
  CexConfig cfg;
  cfg.optimizer.seed = 5;
  for (bool should_refute : {true, false}) {
    ProofGoal g = should_refute ? overscaled_goal() : scaled_goal();
    TestCaseCache cold;
    auto cold_run = find_counterexample(g, cold, cfg);
    TestCaseCache warm;
    warm.add(g.var_names(), symmetric_point());
    auto warm_run = find_counterexample(g, warm, cfg);
    CHECK(cold_run.cex.has_value() == should_refute);
    CHECK(warm_run.cex.has_value() == should_refute);
  }
}

TEST_CASE("pipeline: cold run grows the cache, warm run answers from it") {
  CexConfig cfg;
  cfg.optimizer.seed = 11;
  TestCaseCache cache;
  ProofGoal bad = overscaled_goal();

  auto first = find_counterexample(bad, cache, cfg);
  REQUIRE(first.cex.has_value());
  CHECK(first.cex->source == Counterexample::Source::Optimizer);
  CHECK(cache.stats().entries == 1);

  auto second = find_counterexample(bad, cache, cfg);
  REQUIRE(second.cex.has_value());
  CHECK(second.cex->source == Counterexample::Source::Cache);
  CHECK(cache.stats().hits >= 1);

  auto valid = find_counterexample(scaled_goal(), cache, cfg);
  CHECK_FALSE(valid.cex.has_value());
}

TEST_CASE("smtlib emission eliminates sqrt and division with constrained auxiliaries") {
  ProofGoal g = parse_problem(
                    "vars: x > 0, y > 0\n"
                    "assume: sqrt(x) + sqrt(y) = 2\n"
                    "prove: 1/x <= x + y\n")
                    .goal;
  std::string smt = emit_smtlib(g);
  CHECK(smt.find("(set-logic QF_NRA)") == 0);
  CHECK(smt.find("(declare-const x Real)") != std::string::npos);
  CHECK(smt.find("aux_s") != std::string::npos);   // sqrt auxiliary
  CHECK(smt.find("aux_d") != std::string::npos);   // division auxiliary
  CHECK(smt.find("(check-sat)") != std::string::npos);
  CHECK(smt.find("(get-model)") != std::string::npos);
  // negated conclusion
  CHECK(smt.find("(> aux_d") != std::string::npos);

  CHECK_THROWS_AS(emit_smtlib(parse_problem("vars: x\nprove: exp(x) <= 1\n").goal),
                  SmtUnsupported);
}

TEST_CASE("smt_check drives an external process and re-verifies models") {
  std::string dir = "/tmp/ineq_fake_solvers";
  std::string mk = "mkdir -p " + dir;
  REQUIRE(std::system(mk.c_str()) == 0);

  ProofGoal g = parse_problem("vars: x\nprove: x <= 1\n").goal;  // x=2 refutes

  auto sat = fake_solver(dir, "sat.sh",
                         "echo sat\n"
                         "echo '(model (define-fun x () Real 2.0))'\n");
  SmtResult r = smt_check(g, sat, 5.0);
  CHECK(r.verdict == SmtVerdict::Sat);
  REQUIRE(r.model.has_value());
  CHECK(r.model->vals.at("x") == doctest::Approx(2.0));

  // Malformed model collapses to unknown.
  auto malformed = fake_solver(dir, "malformed.sh",
                               "echo sat\n"
                               "echo '(model (define-fun x () Real (root-obj 1)))'\n");
  CHECK(smt_check(g, malformed, 5.0).verdict == SmtVerdict::Unknown);

  // A model that does not actually violate the goal is rejected.
  auto lying = fake_solver(dir, "lying.sh",
                           "echo sat\n"
                           "echo '(model (define-fun x () Real 0.0))'\n");
  CHECK(smt_check(g, lying, 5.0).verdict == SmtVerdict::Unknown);

  auto unsat = fake_solver(dir, "unsat.sh", "echo unsat\n");
  ProofGoal vacuous = parse_problem("vars: x\nassume: x > 0\nassume: x < 0\nprove: x <= -5\n").goal;
  CHECK(smt_check(vacuous, unsat, 5.0).verdict == SmtVerdict::Unsat);

  auto sleepy = fake_solver(dir, "sleepy.sh", "sleep 30\necho sat\n");
  CHECK(smt_check(g, sleepy, 0.3).verdict == SmtVerdict::Unknown);

  CHECK(smt_check(g, "/nonexistent/solver/binary", 1.0).verdict == SmtVerdict::Unavailable);
  CHECK(smt_check(g, "", 1.0).verdict == SmtVerdict::Unavailable);

  // Unsat from the external solver is advisory metadata in the pipeline.
  TestCaseCache cache;
  CexConfig cfg;
  cfg.smt_solver = unsat;
  cfg.optimizer.seed = 2;
  cfg.optimizer.max_evaluations = 500;
  auto out = find_counterexample(parse_problem("vars: x\nprove: 0 <= x^2\n").goal, cache, cfg);
  CHECK_FALSE(out.cex.has_value());
  CHECK(out.smt_unsat_advisory);
}
