#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "ineq/lemma.hpp"

using namespace ineq;

namespace {

const ScalingLemma& by_name(const std::vector<ScalingLemma>& lib, const std::string& name) {
  for (const auto& l : lib)
    if (l.name == name) return l;
  throw std::runtime_error("missing lemma " + name);
}

ProofGoal goal_from(const std::string& text) {
  return parse_problem(text).goal;
}

ProofGoal running_example() {
  return goal_from(
      "vars: a > 0, b > 0, c > 0\n"
      "assume: a^2 + b^2 + c^2 = 1\n"
      "prove: 1/(a^2+2) + 1/(b^2+2) + 1/(c^2+2) <= "
      "1/(6*a*b+c^2) + 1/(6*b*c+a^2) + 1/(6*c*a+b^2)\n");
}

// Multiset-of-values comparison, ignoring slot naming.
bool has_binding_values(const std::vector<Substitution>& subs,
                        const std::vector<std::string>& values) {
  std::vector<std::string> want = values;
  std::sort(want.begin(), want.end());
  for (const auto& s : subs) {
    std::vector<std::string> got;
    for (const auto& [slot, val] : s.bindings) got.push_back(to_string(canonical(val)));
    std::sort(got.begin(), got.end());
    if (got == want) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("default library loads with zero soundness failures") {
  auto lib = load_lemma_library(default_lemma_path());
  CHECK(lib.size() >= 24);
  for (const auto& lemma : lib) {
    std::string why;
    CHECK_MESSAGE(check_lemma_soundness(lemma, 99, 1000, &why), why);
    CHECK(!lemma.lean_name.empty());
  }
  // Names map one-to-one onto lean tactic names.
  std::set<std::string> names, leans;
  for (const auto& l : lib) {
    names.insert(l.name);
    leans.insert(l.lean_name);
  }
  CHECK(names.size() == lib.size());
  CHECK(leans.size() == lib.size());
}

TEST_CASE("condition-free AM-GM loads; the flipped form is rejected by sampling") {
  auto ok = parse_lemma_library(
      "name=t1\nargs=u,v\ntrigger=u*v\nbound=(u^2+v^2)/2\nside=left\ndir=upper\n");
  std::string why;
  CHECK(check_lemma_soundness(ok[0], 1, 1000, &why));

  // u+v <= 2 sqrt(uv) is false for positive reals unless u = v.
  auto bad_upper = parse_lemma_library(
      "name=t2\nargs=u,v\ntrigger=u+v\nbound=2*sqrt(u*v)\nside=left\ndir=upper\n");
  CHECK_FALSE(check_lemma_soundness(bad_upper[0], 1, 1000, &why));

  // 2 sqrt(uv) <= u+v fails without positivity (u = v = -1).
  auto bad_lower = parse_lemma_library(
      "name=t3\nargs=u,v\ntrigger=u+v\nbound=2*sqrt(u*v)\nside=left\ndir=lower\n");
  CHECK_FALSE(check_lemma_soundness(bad_lower[0], 1, 1000, &why));

  auto good_lower = parse_lemma_library(
      "name=t4\nargs=u,v\ntrigger=u+v\nbound=2*sqrt(u*v)\nside=left\ndir=lower\ncond=u>=0,v>=0\n");
  CHECK(check_lemma_soundness(good_lower[0], 1, 1000, &why));
}

TEST_CASE("malformed stanzas are parse errors") {
  CHECK_THROWS_AS(parse_lemma_library("name=x\nargs=u\ntrigger=u*z\nbound=u\nside=left\ndir=upper\n"),
                  LemmaError);
  CHECK_THROWS_AS(parse_lemma_library("name=x\nargs=u\ntrigger=u\nbound=u\nside=middle\ndir=upper\n"),
                  LemmaError);
}

TEST_CASE("product match against x*y <= 1 dedups the slot swap") {
  auto lib = load_lemma_library(default_lemma_path());
  const auto& amgm = by_name(lib, "am_gm_mul_left_2vars");
  ProofGoal g = goal_from("vars: x, y\nprove: x*y <= 1\n");
  auto subs = match_lemma(amgm, g);
  REQUIRE(subs.size() == 1);
  CHECK(has_binding_values(subs, {"x", "y"}));

  // No product subterm, decompositions off -> empty.
  ProofGoal g2 = goal_from("vars: x, y\nprove: x + y <= 1\n");
  MatchOptions structural;
  structural.decomposition_level = 0;
  CHECK(match_lemma(amgm, g2, structural).empty());
}

TEST_CASE("running example: product patterns found at the right-side denominators") {
  auto lib = load_lemma_library(default_lemma_path());
  const auto& amgm = by_name(lib, "am_gm_mul_right_2vars");
  ProofGoal g = running_example();
  auto subs = match_lemma(amgm, g);
  CHECK(has_binding_values(subs, {"a", "b"}));
  CHECK(has_binding_values(subs, {"b", "c"}));
  CHECK(has_binding_values(subs, {"a", "c"}));
}

TEST_CASE("running example: the full 2-var family reaches the named instantiations") {
  auto lib = load_lemma_library(default_lemma_path());
  ProofGoal g = running_example();
  MatchOptions deep;
  deep.decomposition_level = 2;
  std::vector<Substitution> all;
  for (const auto& lemma : lib) {
    if (lemma.name.rfind("am_gm_", 0) != 0 || lemma.name.find("2vars") == std::string::npos)
      continue;
    auto subs = match_lemma(lemma, g, deep);
    all.insert(all.end(), subs.begin(), subs.end());
  }
  CHECK(has_binding_values(all, {"a", "b"}));
  CHECK(has_binding_values(all, {"b", "c"}));
  CHECK(has_binding_values(all, {"a", "c"}));
  CHECK(has_binding_values(all, {"a", "sqrt(2)"}));
  CHECK(has_binding_values(all, {"1", "1/sqrt(a^2 + 2)"}));
  CHECK(all.size() >= 20);  // the instantiation space is much larger than the sound subset
}

TEST_CASE("match lists are deterministic") {
  auto lib = load_lemma_library(default_lemma_path());
  const auto& amgm = by_name(lib, "am_gm_mul_right_2vars");
  ProofGoal g = running_example();
  auto a = match_lemma(amgm, g);
  auto b = match_lemma(amgm, g);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position == b[i].position);
    CHECK(to_string(a[i].new_conclusion) == to_string(b[i].new_conclusion));
  }
}

TEST_CASE("substitutions re-verify against the trigger") {
  auto lib = load_lemma_library(default_lemma_path());
  ProofGoal g = running_example();
  for (const char* name : {"am_gm_mul_right_2vars", "am_gm_sq_left_2vars"}) {
    const auto& lemma = by_name(lib, name);
    for (const auto& s : match_lemma(lemma, g)) {
      std::map<std::string, ExprPtr> m(s.bindings.begin(), s.bindings.end());
      ExprPtr inst = mul(constant(s.absorbed_coeff), substitute(lemma.trigger, m));
      // structural or numeric agreement
      bool structural = equal(canonical(inst), canonical(s.matched));
      bool numeric = true;
      std::mt19937_64 rng(5);
      auto pts = sample_feasible(g, rng, 8);
      for (const auto& pt : pts) {
        auto x = evaluate(inst, pt);
        auto y = evaluate(s.matched, pt);
        if (!x || !y || std::fabs(*x - *y) > 1e-8 * std::max({1.0, std::fabs(*x)})) numeric = false;
      }
      CHECK((structural || numeric));
    }
  }
}

TEST_CASE("applying the cyclic product bundle rewrites all three denominators") {
  auto lib = load_lemma_library(default_lemma_path());
  const auto& amgm = by_name(lib, "am_gm_mul_right_2vars");
  ProofGoal g = running_example();
  auto subs = match_lemma(amgm, g);
  // pick the {a,b} product match
  const Substitution* ab = nullptr;
  for (const auto& s : subs) {
    std::vector<std::string> got;
    for (const auto& [k, v] : s.bindings) got.push_back(to_string(canonical(v)));
    std::sort(got.begin(), got.end());
    if (got == std::vector<std::string>{"a", "b"}) ab = &s;
  }
  REQUIRE(ab != nullptr);
  auto [child, steps] = apply_scaling_bundled(g, amgm, *ab);
  CHECK(steps.size() == 3);

  ProofGoal expect = goal_from(
      "vars: a > 0, b > 0, c > 0\n"
      "assume: a^2 + b^2 + c^2 = 1\n"
      "prove: 1/(a^2+2) + 1/(b^2+2) + 1/(c^2+2) <= "
      "1/(3*a^2+3*b^2+c^2) + 1/(3*b^2+3*c^2+a^2) + 1/(3*a^2+3*c^2+b^2)\n");
  CHECK(goal_key(child) == goal_key(expect));
}

TEST_CASE("applying the constant-sqrt bundle reproduces the overscaled goal") {
  auto lib = load_lemma_library(default_lemma_path());
  const auto& sq = by_name(lib, "am_gm_sq_left_2vars");
  ProofGoal g = running_example();
  auto subs = match_lemma(sq, g);
  const Substitution* pick = nullptr;
  for (const auto& s : subs) {
    std::vector<std::string> got;
    for (const auto& [k, v] : s.bindings) got.push_back(to_string(canonical(v)));
    std::sort(got.begin(), got.end());
    if (got == std::vector<std::string>{"a", "sqrt(2)"}) pick = &s;
  }
  REQUIRE(pick != nullptr);
  auto [child, steps] = apply_scaling_bundled(g, sq, *pick);
  CHECK(steps.size() == 3);

  ProofGoal expect = goal_from(
      "vars: a > 0, b > 0, c > 0\n"
      "assume: a^2 + b^2 + c^2 = 1\n"
      "prove: 1/(2*sqrt(2)*a) + 1/(2*sqrt(2)*b) + 1/(2*sqrt(2)*c) <= "
      "1/(6*a*b+c^2) + 1/(6*b*c+a^2) + 1/(6*c*a+b^2)\n");
  CHECK(goal_key(child) == goal_key(expect));
}

TEST_CASE("direct replacement on the left side") {
  auto lib = load_lemma_library(default_lemma_path());
  const auto& amgm = by_name(lib, "am_gm_mul_left_2vars");
  ProofGoal g = goal_from("vars: x, y\nprove: x*y <= 1\n");
  auto subs = match_lemma(amgm, g);
  REQUIRE(subs.size() == 1);
  ProofGoal child = apply_scaling(g, amgm, subs[0]);
  ProofGoal expect = goal_from("vars: x, y\nprove: (x^2+y^2)/2 <= 1\n");
  CHECK(goal_key(child) == goal_key(expect));
}

TEST_CASE("sampled implication: every child goal implies its parent") {
  auto lib = load_lemma_library(default_lemma_path());
  ProofGoal g = running_example();
  std::mt19937_64 rng(17);
  auto pts = sample_feasible(g, rng, 60);
  REQUIRE(pts.size() >= 30);
  int checked = 0;
  for (const char* name :
       {"am_gm_mul_right_2vars", "am_gm_sq_left_2vars", "am_hm_right_3vars"}) {
    const auto& lemma = by_name(lib, name);
    for (const auto& s : match_lemma(lemma, g)) {
      ProofGoal child = apply_scaling(g, lemma, s);
      for (const auto& pt : pts) {
        auto cv = conclusion_violation(child, pt);
        auto pv = conclusion_violation(g, pt);
        if (!cv || !pv) continue;
        // child holds (violation <= 0) must imply parent holds
        if (*cv <= 1e-12) CHECK(*pv <= 1e-7);
      }
      ++checked;
    }
  }
  CHECK(checked >= 4);
}
