#include <algorithm>
#include <functional>
#include <set>

#include "ineq/lemma.hpp"
#include "ineq/polynomial.hpp"

namespace ineq {

namespace {

using Bindings = std::map<std::string, ExprPtr>;
using Rebuild = std::function<ExprPtr(const ExprPtr&)>;

bool merge_binding(Bindings& b, const std::string& slot, const ExprPtr& val) {
  auto it = b.find(slot);
  if (it == b.end()) {
    b[slot] = canonical(val);
    return true;
  }
  return equal(it->second, canonical(val));
}

bool is_bare_slot(const ExprPtr& pat, const std::vector<std::string>& slots) {
  return pat->op == Op::Var &&
         std::find(slots.begin(), slots.end(), pat->name) != slots.end();
}

// sqrt of a subterm, pushed through products, quotients and even powers so
// the bindings print the way instantiations are written (1/sqrt(x), a*sqrt(2)).
ExprPtr sqrt_push(const ExprPtr& e, const ProofGoal& g) {
  switch (e->op) {
    case Op::Const: return sqrt_(e);
    case Op::Pow:
      if (e->b->op == Op::Const && rat_is_integer(e->b->value)) {
        auto k = rat_to_long(e->b->value);
        if (k && *k > 0 && *k % 2 == 0) {
          ExprPtr half = pow_(e->a, constant(*k / 2));
          if (provably_nonneg(e->a, g)) return half;
          return abs_(half);
        }
      }
      return sqrt_(e);
    case Op::Mul: return mul(sqrt_push(e->a, g), sqrt_push(e->b, g));
    case Op::Div: return div(sqrt_push(e->a, g), sqrt_push(e->b, g));
    default:
      if (e->op == Op::Var && provably_nonneg(e, g)) return sqrt_(e);
      return sqrt_(e);
  }
}

struct Matcher {
  const ScalingLemma& lemma;
  const ProofGoal& goal;
  const MatchOptions& opts;
  int required_pol = 0;
  RelOp goal_op = RelOp::Le;  // reoriented
  ExprPtr left_le, right_le;  // reoriented conclusion sides (canonical)
  bool swapped = false;       // original conclusion was Ge/Gt
  std::vector<std::map<std::string, double>> samples;
  bool samples_ready = false;
  std::vector<Substitution> out;
  std::set<std::string> seen;

  Matcher(const ScalingLemma& l, const ProofGoal& g, const MatchOptions& o)
      : lemma(l), goal(g), opts(o) {}

  const std::vector<std::map<std::string, double>>& feasible_samples() {
    if (!samples_ready) {
      std::mt19937_64 rng(opts.seed ^ std::hash<std::string>{}(goal_key(goal)));
      samples = sample_feasible(goal, rng, opts.condition_samples);
      samples_ready = true;
    }
    return samples;
  }

  bool nonneg(const ExprPtr& e) const { return provably_nonneg(e, goal); }
  bool nonpos(const ExprPtr& e) const { return provably_nonpos(e, goal); }
  bool positive(const ExprPtr& e) const { return provably_positive(e, goal); }

  // ---- pattern unification --------------------------------------------

  std::vector<Bindings> unify(const ExprPtr& pat, const ExprPtr& node, const Bindings& base) {
    std::vector<Bindings> solutions;
    if (is_bare_slot(pat, lemma.slots)) {
      Bindings b = base;
      if (merge_binding(b, pat->name, node)) solutions.push_back(std::move(b));
      return solutions;
    }
    switch (pat->op) {
      case Op::Const:
        if (node->op == Op::Const && node->value == pat->value) solutions.push_back(base);
        break;
      case Op::Var: break;  // non-slot identifiers never occur in triggers
      case Op::Neg:
        if (node->op == Op::Neg) return unify(pat->a, node->a, base);
        break;
      case Op::Sqrt:
        if (node->op == Op::Sqrt) return unify(pat->a, node->a, base);
        break;
      case Op::Exp:
      case Op::Log:
      case Op::Abs:
        if (node->op == pat->op) return unify(pat->a, node->a, base);
        break;
      case Op::Div:
        if (node->op == Op::Div) {
          for (auto& b1 : unify(pat->a, node->a, base))
            for (auto& b2 : unify(pat->b, node->b, b1)) solutions.push_back(b2);
        }
        break;
      case Op::Pow: {
        if (pat->b->op != Op::Const) {
          if (node->op == Op::Pow) {
            for (auto& b1 : unify(pat->a, node->a, base))
              for (auto& b2 : unify(pat->b, node->b, b1)) solutions.push_back(b2);
          }
          break;
        }
        const Rat& pe = pat->b->value;
        if (node->op == Op::Pow && node->b->op == Op::Const) {
          const Rat& ne = node->b->value;
          if (ne == pe) return unify(pat->a, node->a, base);
          Rat ratio = ne / pe;
          if (rat_is_integer(ratio) && ratio >= 2) {
            auto m = rat_to_long(ratio);
            if (m) return unify(pat->a, pow_(node->a, constant(*m)), base);
          }
          break;
        }
        if (pe == 2 && node->op == Op::Const && node->value >= 0 &&
            opts.decomposition_level >= 1) {
          return unify(pat->a, sqrt_(node), base);
        }
        if (pe == 2 && opts.decomposition_level >= 2 && nonneg(node)) {
          return unify(pat->a, sqrt_push(node, goal), base);
        }
        break;
      }
      case Op::Add:
      case Op::Sub: {
        // Inner sums must consume the node chain completely.
        auto pterms = sum_terms(pat);
        auto nterms = sum_terms(node);
        if (pterms.size() != nterms.size()) break;
        for (auto& [s, t] : pterms)
          if (s) return solutions;  // triggers use positive chains only
        std::vector<size_t> order(nterms.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        assign(pterms, nterms, order, 0, base, solutions, /*allow_one=*/false);
        break;
      }
      case Op::Mul: {
        bool negf = false;
        auto pfac = factors_of(pat);
        std::vector<ExprPtr> nfac =
            node->op == Op::Mul ? product_factors(node, negf) : std::vector<ExprPtr>{node};
        if (negf) break;
        assign_product(pfac, nfac, base, solutions, /*allow_leftover=*/false, nullptr);
        break;
      }
    }
    return solutions;
  }

  static std::vector<ExprPtr> factors_of(const ExprPtr& e) {
    bool neg = false;
    auto f = product_factors(e, neg);
    return f;
  }

  // Injective assignment of pattern sum operands onto node terms.
  void assign(const std::vector<std::pair<bool, ExprPtr>>& pterms,
              const std::vector<std::pair<bool, ExprPtr>>& nterms, std::vector<size_t>& avail,
              size_t pi, const Bindings& b, std::vector<Bindings>& solutions, bool allow_one) {
    if (pi == pterms.size()) {
      solutions.push_back(b);
      return;
    }
    for (size_t j = 0; j < avail.size(); ++j) {
      size_t idx = avail[j];
      if (idx == SIZE_MAX) continue;
      if (nterms[idx].first) continue;
      avail[j] = SIZE_MAX;
      for (auto& nb : unify(pterms[pi].second, nterms[idx].second, b))
        assign(pterms, nterms, avail, pi + 1, nb, solutions, allow_one);
      avail[j] = idx;
    }
  }

  // Injective assignment of product operands onto node factors. Constant
  // factors are absorbed by the caller; `consumed` records which factor
  // indices a solution used (parallel to solutions).
  void assign_product(const std::vector<ExprPtr>& pfac, const std::vector<ExprPtr>& nfac,
                      const Bindings& base, std::vector<Bindings>& solutions, bool allow_leftover,
                      std::vector<std::vector<size_t>>* consumed) {
    std::vector<size_t> used;
    std::function<void(size_t, const Bindings&)> rec = [&](size_t pi, const Bindings& b) {
      if (pi == pfac.size()) {
        solutions.push_back(b);
        if (consumed) consumed->push_back(used);
        return;
      }
      for (size_t j = 0; j < nfac.size(); ++j) {
        if (std::find(used.begin(), used.end(), j) != used.end()) continue;
        used.push_back(j);
        for (auto& nb : unify(pfac[pi], nfac[j], b)) rec(pi + 1, nb);
        used.pop_back();
      }
      // A bare slot may take the constant 1 (trivial factorisation).
      if (opts.decomposition_level >= 1 && is_bare_slot(pfac[pi], lemma.slots)) {
        Bindings nb = b;
        if (merge_binding(nb, pfac[pi]->name, constant(1))) rec(pi + 1, nb);
      }
    };
    rec(0, base);
    if (!allow_leftover && consumed) {
      // caller filters
    }
  }

  // ---- positions --------------------------------------------------------

  void walk(const ExprPtr& node, int pol, const Rebuild& rb, const std::string& path) {
    if (out.size() >= opts.max_matches) return;
    if (pol == required_pol) try_here(node, rb, path);

    switch (node->op) {
      case Op::Add:
      case Op::Sub: {
        auto terms = sum_terms(node);
        for (size_t i = 0; i < terms.size(); ++i) {
          auto child_rb = [rb, terms, i](const ExprPtr& r) {
            auto copy = terms;
            copy[i].second = r;
            return rb(rebuild_sum(copy));
          };
          walk(terms[i].second, terms[i].first ? -pol : pol, child_rb,
               path + ".t" + std::to_string(i));
        }
        break;
      }
      case Op::Mul: {
        bool negf = false;
        auto factors = product_factors(node, negf);
        int base_pol = negf ? -pol : pol;
        for (size_t i = 0; i < factors.size(); ++i) {
          int sibling_sign = 1;
          bool known = true;
          for (size_t j = 0; j < factors.size() && known; ++j) {
            if (j == i) continue;
            if (nonneg(factors[j])) continue;
            if (nonpos(factors[j]))
              sibling_sign = -sibling_sign;
            else
              known = false;
          }
          if (!known) continue;
          auto child_rb = [rb, factors, negf, i](const ExprPtr& r) {
            auto copy = factors;
            copy[i] = r;
            return rb(rebuild_product(copy, negf));
          };
          walk(factors[i], base_pol * sibling_sign, child_rb, path + ".f" + std::to_string(i));
        }
        break;
      }
      case Op::Neg:
        walk(node->a, -pol, [rb](const ExprPtr& r) { return rb(neg(r)); }, path + ".n");
        break;
      case Op::Div: {
        if (positive(node->b))
          walk(node->a, pol, [rb, node](const ExprPtr& r) { return rb(div(r, node->b)); },
               path + ".num");
        if (positive(node->b) && nonneg(node->a))
          walk(node->b, -pol, [rb, node](const ExprPtr& r) { return rb(div(node->a, r)); },
               path + ".den");
        else if (positive(node->b) && nonpos(node->a))
          walk(node->b, pol, [rb, node](const ExprPtr& r) { return rb(div(node->a, r)); },
               path + ".den");
        break;
      }
      case Op::Pow: {
        const ExprPtr& b = node->b;
        int child_pol = 0;
        if (b->op == Op::Const) {
          if (rat_is_integer(b->value)) {
            auto k = rat_to_long(b->value);
            if (k && *k >= 1) {
              if (*k % 2 == 1)
                child_pol = pol;
              else if (nonneg(node->a))
                child_pol = pol;
              else if (nonpos(node->a))
                child_pol = -pol;
            } else if (k && *k <= -1 && positive(node->a)) {
              child_pol = -pol;
            }
          } else if (positive(node->a)) {
            child_pol = b->value > 0 ? pol : -pol;
          }
        }
        if (child_pol != 0)
          walk(node->a, child_pol,
               [rb, node](const ExprPtr& r) { return rb(pow_(r, node->b)); }, path + ".base");
        break;
      }
      case Op::Sqrt:
        walk(node->a, pol, [rb](const ExprPtr& r) { return rb(sqrt_(r)); }, path + ".arg");
        break;
      case Op::Exp:
        walk(node->a, pol, [rb](const ExprPtr& r) { return rb(exp_(r)); }, path + ".arg");
        break;
      case Op::Log:
        walk(node->a, pol, [rb](const ExprPtr& r) { return rb(log_(r)); }, path + ".arg");
        break;
      default: break;
    }
  }

  void try_here(const ExprPtr& node, const Rebuild& rb, const std::string& path) {
    const ExprPtr& trig = lemma.trigger;
    if (trig->op == Op::Add) {
      if (node->op != Op::Add && node->op != Op::Sub) return;
      auto pterms = sum_terms(trig);
      auto nterms = sum_terms(node);
      if (nterms.size() < pterms.size()) return;
      for (auto& [s, t] : pterms)
        if (s) return;
      // k candidates: 1 plus any common constant coefficient.
      std::vector<Rat> ks{Rat(1)};
      for (const auto& [sign, t] : nterms) {
        if (sign) continue;
        bool negf = false;
        auto f = product_factors(t, negf);
        if (!negf && !f.empty() && f[0]->op == Op::Const && f[0]->value > 0 && f[0]->value != 1)
          ks.push_back(f[0]->value);
      }
      std::sort(ks.begin(), ks.end());
      ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
      for (const Rat& k : ks) {
        auto stripped = nterms;
        if (k != 1)
          for (auto& [sign, t] : stripped) t = canonical(mul(constant(Rat(1 / k)), t));
        // enumerate subsets via injective assignment, tracking consumption
        std::vector<size_t> used;
        std::function<void(size_t, const Bindings&)> rec = [&](size_t pi, const Bindings& b) {
          if (out.size() >= opts.max_matches) return;
          if (pi == pterms.size()) {
            finalize_add(node, nterms, used, k, b, rb, path);
            return;
          }
          for (size_t j = 0; j < stripped.size(); ++j) {
            if (stripped[j].first) continue;
            if (std::find(used.begin(), used.end(), j) != used.end()) continue;
            used.push_back(j);
            for (auto& nb : unify(pterms[pi].second, stripped[j].second, b)) rec(pi + 1, nb);
            used.pop_back();
          }
        };
        rec(0, Bindings{});
      }
      return;
    }
    if (trig->op == Op::Mul) {
      auto pfac = factors_of(trig);
      bool negf = false;
      std::vector<ExprPtr> nfac;
      Rat k(1);
      if (node->op == Op::Mul) {
        nfac = product_factors(node, negf);
        if (negf) return;
        std::vector<ExprPtr> rest;
        for (auto& f : nfac) {
          if (f->op == Op::Const && f->value > 0)
            k *= f->value;
          else
            rest.push_back(f);
        }
        nfac = rest;
        if (nfac.empty()) return;
      } else {
        if (node->op == Op::Const) return;
        nfac = {node};
      }
      std::vector<Bindings> solutions;
      std::vector<std::vector<size_t>> consumed;
      assign_product(pfac, nfac, Bindings{}, solutions, true, &consumed);
      for (size_t s = 0; s < solutions.size(); ++s) {
        // Leftover factors stay in place; they must not flip the sign.
        std::vector<ExprPtr> leftover;
        bool ok = true;
        for (size_t j = 0; j < nfac.size(); ++j) {
          if (std::find(consumed[s].begin(), consumed[s].end(), j) != consumed[s].end()) continue;
          if (!nonneg(nfac[j])) ok = false;
          leftover.push_back(nfac[j]);
        }
        if (!ok) continue;
        finalize_mul(node, nfac, consumed[s], leftover, k, solutions[s], rb, path);
      }
      return;
    }
    // Structural trigger.
    for (auto& b : unify(trig, node, Bindings{})) finalize_plain(node, b, rb, path);
  }

  // ---- finalization ------------------------------------------------------

  bool conditions_hold(const Bindings& b) {
    for (const auto& cond : lemma.side_conditions) {
      std::map<std::string, ExprPtr> m(b.begin(), b.end());
      ExprPtr lhs = substitute(cond.lhs, m);
      ExprPtr rhs = substitute(cond.rhs, m);
      if (feasible_samples().empty()) return false;
      for (const auto& pt : samples) {
        auto l = evaluate(lhs, pt);
        auto r = evaluate(rhs, pt);
        if (!l || !r) return false;
        double d = *l - *r;
        bool ok = true;
        switch (cond.op) {
          case RelOp::Le: ok = d <= 1e-9; break;
          case RelOp::Lt: ok = d < 0; break;
          case RelOp::Ge: ok = d >= -1e-9; break;
          case RelOp::Gt: ok = d > 0; break;
          case RelOp::Eq: ok = std::fabs(d) <= 1e-9; break;
        }
        if (!ok) return false;
      }
    }
    return true;
  }

  bool slots_complete(const Bindings& b) {
    for (const auto& s : lemma.slots)
      if (!b.count(s)) return false;
    return true;
  }

  bool verify_consumption(const Bindings& b, const Rat& k, const ExprPtr& consumed) {
    std::map<std::string, ExprPtr> m(b.begin(), b.end());
    ExprPtr inst = mul(constant(k), substitute(lemma.trigger, m));
    if (equal(canonical(inst), canonical(consumed))) return true;
    // Constant coefficients do not distribute structurally; fall back to an
    // exact polynomial check, then to sampling.
    ExprPtr diff = sub(inst, consumed);
    try {
      return normalize_polynomial(diff).is_zero();
    } catch (const NotPolynomial&) {
    }
    if (feasible_samples().empty()) return false;
    for (const auto& pt : samples) {
      auto l = evaluate(inst, pt);
      auto r = evaluate(consumed, pt);
      if (!l || !r) return false;
      double scale = std::max({1.0, std::fabs(*l), std::fabs(*r)});
      if (std::fabs(*l - *r) > 1e-8 * scale) return false;
    }
    return true;
  }

  void emit(const ExprPtr& consumed, const ExprPtr& new_portion, const Bindings& b, const Rat& k,
            const Rebuild& rb, const std::string& path) {
    if (!slots_complete(b)) return;
    // Constant trigger instances (e.g. every slot bound to 1) scale nothing.
    {
      std::map<std::string, ExprPtr> m(b.begin(), b.end());
      if (canonical(substitute(lemma.trigger, m))->op == Op::Const) return;
    }
    if (!verify_consumption(b, k, consumed)) return;
    if (!conditions_hold(b)) return;
    ExprPtr new_side = canonical(rb(new_portion));
    // A child identical to its parent is useless and can cycle the search.
    if (equal(new_side, lemma.side == ScalingLemma::Side::Left ? left_le : right_le)) return;
    ExprPtr other = lemma.side == ScalingLemma::Side::Left ? right_le : left_le;
    Relation le;
    if (lemma.side == ScalingLemma::Side::Left)
      le = Relation{new_side, goal_op, other};
    else
      le = Relation{other, goal_op, new_side};
    Relation conclusion = swapped ? Relation{le.rhs, goal_op == RelOp::Le ? RelOp::Ge : RelOp::Gt,
                                             le.lhs}
                                  : le;
    std::string key = path + "|" + to_string(new_side);
    if (!seen.insert(key).second) return;
    Substitution sub;
    sub.bindings = std::map<std::string, ExprPtr>(b.begin(), b.end());
    sub.position = path;
    sub.absorbed_coeff = k;
    sub.matched = consumed;
    sub.new_conclusion = conclusion;
    out.push_back(std::move(sub));
  }

  void finalize_add(const ExprPtr& node, const std::vector<std::pair<bool, ExprPtr>>& nterms,
                    const std::vector<size_t>& used, const Rat& k, const Bindings& b,
                    const Rebuild& rb, const std::string& path) {
    std::map<std::string, ExprPtr> m(b.begin(), b.end());
    // consumed = k * (sum of matched node terms)
    std::vector<std::pair<bool, ExprPtr>> consumed_terms;
    std::vector<std::pair<bool, ExprPtr>> rest;
    for (size_t j = 0; j < nterms.size(); ++j) {
      if (std::find(used.begin(), used.end(), j) != used.end())
        consumed_terms.push_back(nterms[j]);
      else
        rest.push_back(nterms[j]);
    }
    ExprPtr consumed = rebuild_sum(consumed_terms);
    ExprPtr inst = mul(constant(k), substitute(lemma.bound, m));
    rest.emplace_back(false, inst);
    auto sorted = used;
    std::sort(sorted.begin(), sorted.end());
    std::string key = path + ".+[";
    for (size_t j : sorted) key += std::to_string(j) + ",";
    key += "]k=" + rat_to_string(k);
    emit(consumed, rebuild_sum(rest), b, k, rb, key);
  }

  void finalize_mul(const ExprPtr& node, const std::vector<ExprPtr>& nfac,
                    const std::vector<size_t>& used, const std::vector<ExprPtr>& leftover,
                    const Rat& k, const Bindings& b, const Rebuild& rb, const std::string& path) {
    std::map<std::string, ExprPtr> m(b.begin(), b.end());
    std::vector<ExprPtr> consumed_fs;
    for (size_t j : used) consumed_fs.push_back(nfac[j]);
    ExprPtr consumed = mul(constant(k), rebuild_product(consumed_fs, false));
    std::vector<ExprPtr> new_fs{mul(constant(k), substitute(lemma.bound, m))};
    for (auto& f : leftover) new_fs.push_back(f);
    auto sorted = used;
    std::sort(sorted.begin(), sorted.end());
    std::string key = path + ".*[";
    for (size_t j : sorted) key += std::to_string(j) + ",";
    key += "]k=" + rat_to_string(k);
    emit(consumed, rebuild_product(new_fs, false), b, k, rb, key);
  }

  void finalize_plain(const ExprPtr& node, const Bindings& b, const Rebuild& rb,
                      const std::string& path) {
    std::map<std::string, ExprPtr> m(b.begin(), b.end());
    emit(node, substitute(lemma.bound, m), b, Rat(1), rb, path + ".@");
  }
};

}  // namespace

std::vector<Substitution> match_lemma(const ScalingLemma& lemma, const ProofGoal& goal,
                                      const MatchOptions& opts) {
  if (goal.conclusion.op == RelOp::Eq) return {};
  Matcher m(lemma, goal, opts);
  Relation le = conclusion_as_le(goal);
  m.goal_op = le.op;
  m.swapped = goal.conclusion.op == RelOp::Ge || goal.conclusion.op == RelOp::Gt;
  m.left_le = canonical(le.lhs);
  m.right_le = canonical(le.rhs);
  bool upper = lemma.dir == ScalingLemma::Dir::Upper;
  bool left = lemma.side == ScalingLemma::Side::Left;
  // Strengthening requires raising the left side or lowering the right one.
  m.required_pol = left == upper ? 1 : -1;

  ExprPtr root = left ? m.left_le : m.right_le;
  m.walk(root, 1, [](const ExprPtr& r) { return r; }, left ? "L" : "R");
  return std::move(m.out);
}

}  // namespace ineq
