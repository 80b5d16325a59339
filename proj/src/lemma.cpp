#include "ineq/lemma.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace ineq {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

// Slots constrained nonnegative by a side condition of the shape s >= 0,
// s > 0, 0 <= s or 0 < s.
std::set<std::string> positive_slots(const ScalingLemma& lemma) {
  std::set<std::string> out;
  for (const auto& c : lemma.side_conditions) {
    if ((c.op == RelOp::Ge || c.op == RelOp::Gt) && c.lhs->op == Op::Var &&
        is_const(c.rhs, Rat(0)))
      out.insert(c.lhs->name);
    if ((c.op == RelOp::Le || c.op == RelOp::Lt) && c.rhs->op == Op::Var &&
        is_const(c.lhs, Rat(0)))
      out.insert(c.rhs->name);
  }
  return out;
}

}  // namespace

bool check_lemma_soundness(const ScalingLemma& lemma, uint64_t seed, int samples,
                           std::string* why) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(-2.0, 2.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto positives = positive_slots(lemma);
  int accepted = 0;
  for (int i = 0; i < samples * 8 && accepted < samples; ++i) {
    std::map<std::string, double> pt;
    for (const auto& s : lemma.slots) {
      double x = std::pow(10.0, mag(rng));
      if (!positives.count(s) && coin(rng) < 0.5) x = -x;
      pt[s] = x;
    }
    bool ok = true;
    for (const auto& c : lemma.side_conditions) {
      auto l = evaluate(c.lhs, pt);
      auto r = evaluate(c.rhs, pt);
      if (!l || !r) {
        ok = false;
        break;
      }
      double d = *l - *r;
      switch (c.op) {
        case RelOp::Le: ok = d <= 0; break;
        case RelOp::Lt: ok = d < 0; break;
        case RelOp::Ge: ok = d >= 0; break;
        case RelOp::Gt: ok = d > 0; break;
        case RelOp::Eq: ok = d == 0; break;
      }
      if (!ok) break;
    }
    if (!ok) continue;
    auto tv = evaluate(lemma.trigger, pt);
    auto bv = evaluate(lemma.bound, pt);
    if (!tv || !bv) continue;
    ++accepted;
    double scale = std::max({1.0, std::fabs(*tv), std::fabs(*bv)});
    double slack = 1e-9 * scale;
    bool holds = lemma.dir == ScalingLemma::Dir::Upper ? *tv <= *bv + slack : *bv <= *tv + slack;
    if (!holds) {
      if (why) {
        std::ostringstream os;
        os << lemma.name << ": direction violated at";
        for (const auto& [k, v] : pt) os << " " << k << "=" << v;
        os << " (trigger=" << *tv << ", bound=" << *bv << ")";
        *why = os.str();
      }
      return false;
    }
  }
  if (accepted < std::max(1, samples / 10)) {
    if (why) *why = lemma.name + ": side conditions rejected nearly all samples";
    return false;
  }
  return true;
}

std::vector<ScalingLemma> parse_lemma_library(const std::string& text) {
  std::vector<ScalingLemma> out;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> fields;
  int lineno = 0;

  auto flush = [&]() {
    if (fields.empty()) return;
    ScalingLemma lemma;
    auto need = [&](const char* key) -> std::string {
      auto it = fields.find(key);
      if (it == fields.end())
        throw LemmaError("lemma stanza missing '" + std::string(key) + "' near line " +
                         std::to_string(lineno));
      return it->second;
    };
    lemma.name = need("name");
    for (const auto& s : split(need("args"), ','))
      if (!s.empty()) lemma.slots.push_back(s);
    lemma.trigger = parse_expression(need("trigger"));
    lemma.bound = parse_expression(need("bound"));
    std::string side = need("side");
    if (side == "left")
      lemma.side = ScalingLemma::Side::Left;
    else if (side == "right")
      lemma.side = ScalingLemma::Side::Right;
    else
      throw LemmaError(lemma.name + ": side must be left|right");
    std::string dir = need("dir");
    if (dir == "upper")
      lemma.dir = ScalingLemma::Dir::Upper;
    else if (dir == "lower")
      lemma.dir = ScalingLemma::Dir::Lower;
    else
      throw LemmaError(lemma.name + ": dir must be upper|lower");
    if (fields.count("cond") && !fields["cond"].empty())
      for (const auto& c : split(fields["cond"], ','))
        if (!c.empty()) lemma.side_conditions.push_back(parse_relation(c));
    lemma.lean_name = fields.count("lean_name") ? fields["lean_name"] : lemma.name;
    lemma.cyclic = fields.count("cyclic") && fields["cyclic"] == "true";

    auto in_slots = [&](const ExprPtr& e) {
      for (const auto& v : free_vars(e))
        if (std::find(lemma.slots.begin(), lemma.slots.end(), v) == lemma.slots.end())
          throw LemmaError(lemma.name + ": identifier '" + v + "' is not a declared slot");
    };
    in_slots(lemma.trigger);
    in_slots(lemma.bound);
    for (const auto& c : lemma.side_conditions) {
      in_slots(c.lhs);
      in_slots(c.rhs);
    }
    auto trig_vars = free_vars(lemma.trigger);
    for (const auto& s : lemma.slots)
      if (!trig_vars.count(s))
        throw LemmaError(lemma.name + ": slot '" + s + "' does not occur in the trigger");
    out.push_back(std::move(lemma));
    fields.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) {
      flush();
      continue;
    }
    if (t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw LemmaError("lemma file line " + std::to_string(lineno) + ": expected key=value");
    fields[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  flush();
  return out;
}

std::vector<ScalingLemma> load_lemma_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LemmaError("cannot open lemma file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto lemmas = parse_lemma_library(ss.str());
  for (const auto& lemma : lemmas) {
    std::string why;
    if (!check_lemma_soundness(lemma, 0xacce55, 1000, &why))
      throw LemmaError("lemma library rejected: " + why);
  }
  return lemmas;
}

std::string default_lemma_path() { return std::string(INEQ_DATA_DIR) + "/scaling_lemmas.txt"; }

// ---------------------------------------------------------------------------

namespace {

bool structurally_undefined(const ExprPtr& e) {
  if (e->op == Op::Div && is_const(e->b, Rat(0))) return true;
  if (e->op == Op::Sqrt && e->a->op == Op::Const && e->a->value < 0) return true;
  if (e->op == Op::Log && e->a->op == Op::Const && e->a->value <= 0) return true;
  if (e->a && structurally_undefined(e->a)) return true;
  if (e->b && structurally_undefined(e->b)) return true;
  return false;
}

}  // namespace

ProofGoal apply_scaling(const ProofGoal& goal, const ScalingLemma& lemma, const Substitution& s) {
  if (goal.conclusion.op == RelOp::Eq) throw DirectionMismatch();
  if (structurally_undefined(s.new_conclusion.lhs) || structurally_undefined(s.new_conclusion.rhs))
    throw IllFormedResult();
  ProofGoal child = goal.child_with_conclusion(s.new_conclusion);
  child.tactic_label = lemma.name;
  return child;
}

std::vector<std::map<std::string, std::string>> trigger_symmetries(const ScalingLemma& lemma) {
  std::vector<std::map<std::string, std::string>> out;
  std::vector<std::string> perm = lemma.slots;
  std::sort(perm.begin(), perm.end());
  ExprPtr canon_trigger = canonical(lemma.trigger);
  do {
    std::map<std::string, ExprPtr> rename;
    std::map<std::string, std::string> names;
    for (size_t i = 0; i < lemma.slots.size(); ++i) {
      rename[lemma.slots[i]] = variable(perm[i]);
      names[lemma.slots[i]] = perm[i];
    }
    if (equal(canonical(substitute(lemma.trigger, rename)), canon_trigger))
      out.push_back(std::move(names));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

namespace {

bool bindings_match_mod_symmetry(const ScalingLemma& lemma, const Substitution& sub,
                                 const std::map<std::string, ExprPtr>& target,
                                 const std::vector<std::map<std::string, std::string>>& syms) {
  for (const auto& sym : syms) {
    bool all = true;
    for (const auto& [slot, val] : target) {
      auto renamed = sym.count(slot) ? sym.at(slot) : slot;
      auto it = sub.bindings.find(renamed);
      if (it == sub.bindings.end() || !equal(canonical(it->second), canonical(val))) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

}  // namespace

std::pair<ProofGoal, std::vector<ScalingStep>> apply_scaling_bundled(const ProofGoal& goal,
                                                                     const ScalingLemma& lemma,
                                                                     const Substitution& s,
                                                                     const MatchOptions& opts) {
  ProofGoal current = apply_scaling(goal, lemma, s);
  std::vector<ScalingStep> steps{{lemma.name, s}};
  if (!lemma.cyclic) return {current, steps};

  std::vector<std::string> vars = goal.var_names();
  std::sort(vars.begin(), vars.end());
  if (vars.size() < 2) return {current, steps};
  auto syms = trigger_symmetries(lemma);

  for (size_t shift = 1; shift < vars.size(); ++shift) {
    std::map<std::string, ExprPtr> perm;
    for (size_t i = 0; i < vars.size(); ++i) perm[vars[i]] = variable(vars[(i + shift) % vars.size()]);
    std::map<std::string, ExprPtr> image;
    for (const auto& [slot, val] : s.bindings) image[slot] = canonical(substitute(val, perm));
    bool is_identity = true;
    for (const auto& [slot, val] : image)
      if (!equal(val, canonical(s.bindings.at(slot)))) is_identity = false;
    if (is_identity) continue;

    auto matches = match_lemma(lemma, current, opts);
    for (const auto& m : matches) {
      if (!bindings_match_mod_symmetry(lemma, m, image, syms)) continue;
      try {
        current = apply_scaling(current, lemma, m);
        steps.push_back({lemma.name, m});
      } catch (const IllFormedResult&) {
      }
      break;
    }
  }
  return {current, steps};
}

}  // namespace ineq
