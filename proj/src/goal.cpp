#include "ineq/goal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "small_linalg.hpp"

namespace ineq {

const char* rel_op_str(RelOp op) {
  switch (op) {
    case RelOp::Le: return "<=";
    case RelOp::Lt: return "<";
    case RelOp::Ge: return ">=";
    case RelOp::Gt: return ">";
    case RelOp::Eq: return "=";
  }
  return "?";
}

std::string to_string(const Relation& r) {
  return to_string(r.lhs) + " " + rel_op_str(r.op) + " " + to_string(r.rhs);
}

Relation parse_relation(const std::string& text) {
  struct Tok {
    const char* s;
    RelOp op;
  };
  // Longest first so "<=" wins over "<".
  static const Tok toks[] = {
      {"<=", RelOp::Le}, {">=", RelOp::Ge}, {"<", RelOp::Lt}, {">", RelOp::Gt}, {"=", RelOp::Eq}};
  for (const auto& t : toks) {
    auto pos = text.find(t.s);
    if (pos == std::string::npos) continue;
    std::string lhs = text.substr(0, pos);
    std::string rhs = text.substr(pos + std::strlen(t.s));
    return Relation{parse_expression(lhs), t.op, parse_expression(rhs)};
  }
  throw ParseError("no relational operator in '" + text + "'", 0);
}

std::vector<std::string> ProofGoal::var_names() const {
  std::vector<std::string> names;
  names.reserve(vars.size());
  for (const auto& v : vars) names.push_back(v.name);
  return names;
}

bool ProofGoal::is_positive(const std::string& name) const {
  for (const auto& v : vars)
    if (v.name == name) return v.positive;
  return false;
}

ProofGoal ProofGoal::child_with_conclusion(Relation c) const {
  ProofGoal g;
  g.vars = vars;
  g.hypotheses = hypotheses;
  g.conclusion = std::move(c);
  g.parent = id;
  g.depth = depth + 1;
  return g;
}

Relation conclusion_as_le(const ProofGoal& g) {
  const Relation& c = g.conclusion;
  switch (c.op) {
    case RelOp::Ge: return Relation{c.rhs, RelOp::Le, c.lhs};
    case RelOp::Gt: return Relation{c.rhs, RelOp::Lt, c.lhs};
    default: return c;
  }
}

std::optional<ExprPtr> conclusion_slack(const ProofGoal& g) {
  Relation le = conclusion_as_le(g);
  if (le.op == RelOp::Eq) return std::nullopt;
  return sub(le.rhs, le.lhs);
}

std::string goal_key(const ProofGoal& g) {
  std::vector<std::string> hyp;
  for (const auto& h : g.hypotheses)
    hyp.push_back(to_string(canonical(h.lhs)) + rel_op_str(h.op) + to_string(canonical(h.rhs)));
  std::sort(hyp.begin(), hyp.end());
  Relation le = conclusion_as_le(g);
  std::string key = to_string(canonical(le.lhs)) + rel_op_str(le.op) + to_string(canonical(le.rhs));
  for (const auto& h : hyp) key += "|" + h;
  return key;
}

// ---------------------------------------------------------------------------
// Sign analysis

namespace {

enum SignClass { kUnknown = 0, kNonneg = 1, kPositive = 2, kNonpos = 4, kNegative = 8 };

int sign_class(const ExprPtr& e, const ProofGoal& g) {
  switch (e->op) {
    case Op::Const:
      if (e->value > 0) return kPositive | kNonneg;
      if (e->value < 0) return kNegative | kNonpos;
      return kNonneg | kNonpos;
    case Op::Var:
      if (g.is_positive(e->name)) return kPositive | kNonneg;
      return kUnknown;
    case Op::Neg: {
      int s = sign_class(e->a, g);
      int out = 0;
      if (s & kNonneg) out |= kNonpos;
      if (s & kPositive) out |= kNegative;
      if (s & kNonpos) out |= kNonneg;
      if (s & kNegative) out |= kPositive;
      return out;
    }
    case Op::Abs: return kNonneg;
    case Op::Sqrt: return kNonneg | (sign_class(e->a, g) & kPositive);
    case Op::Exp: return kPositive | kNonneg;
    case Op::Log: return kUnknown;
    case Op::Add: {
      int l = sign_class(e->a, g), r = sign_class(e->b, g);
      int out = 0;
      if ((l & kNonneg) && (r & kNonneg)) out |= kNonneg;
      if ((out & kNonneg) && ((l & kPositive) || (r & kPositive))) out |= kPositive;
      if ((l & kNonpos) && (r & kNonpos)) out |= kNonpos;
      if ((out & kNonpos) && ((l & kNegative) || (r & kNegative))) out |= kNegative;
      return out;
    }
    case Op::Sub: return sign_class(add(e->a, neg(e->b)), g);
    case Op::Mul:
    case Op::Div: {
      int l = sign_class(e->a, g), r = sign_class(e->b, g);
      if (e->op == Op::Div && !(r & (kPositive | kNegative))) return kUnknown;
      int out = 0;
      if ((l & kNonneg) && (r & kNonneg)) out |= kNonneg;
      if ((l & kNonpos) && (r & kNonpos)) out |= kNonneg;
      if ((l & kNonneg) && (r & kNonpos)) out |= kNonpos;
      if ((l & kNonpos) && (r & kNonneg)) out |= kNonpos;
      if ((l & kPositive) && (r & kPositive)) out |= kPositive;
      if ((l & kNegative) && (r & kNegative)) out |= kPositive;
      if ((l & kPositive) && (r & kNegative)) out |= kNegative;
      if ((l & kNegative) && (r & kPositive)) out |= kNegative;
      if (out & kPositive) out |= kNonneg;
      if (out & kNegative) out |= kNonpos;
      return out;
    }
    case Op::Pow: {
      if (e->b->op == Op::Const && rat_is_integer(e->b->value)) {
        auto k = rat_to_long(e->b->value);
        if (k && *k % 2 == 0) {
          int base = sign_class(e->a, g);
          return kNonneg | ((base & (kPositive | kNegative)) ? kPositive : 0);
        }
        int base = sign_class(e->a, g);
        return base & (kNonneg | kPositive);  // odd power keeps nonneg/positive
      }
      int base = sign_class(e->a, g);
      if (base & kPositive) return kPositive | kNonneg;
      if (base & kNonneg) return kNonneg;
      return kUnknown;
    }
  }
  return kUnknown;
}

}  // namespace

bool provably_nonneg(const ExprPtr& e, const ProofGoal& g) {
  return sign_class(e, g) & kNonneg;
}
bool provably_nonpos(const ExprPtr& e, const ProofGoal& g) {
  return sign_class(e, g) & kNonpos;
}
bool provably_positive(const ExprPtr& e, const ProofGoal& g) {
  return sign_class(e, g) & kPositive;
}

// ---------------------------------------------------------------------------
// Problem files

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
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Problem parse_problem(const std::string& text) {
  Problem p;
  bool have_prove = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto colon = t.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("problem line " + std::to_string(lineno) + ": expected 'key: value'");
    std::string key = trim(t.substr(0, colon));
    std::string val = trim(t.substr(colon + 1));
    if (key == "name") {
      p.name = val;
    } else if (key == "source") {
      p.source = val;
    } else if (key == "vars") {
      for (const auto& piece : split(val, ',')) {
        std::string d = trim(piece);
        if (d.empty()) continue;
        VarDecl decl;
        auto gt = d.find('>');
        if (gt != std::string::npos) {
          decl.name = trim(d.substr(0, gt));
          std::string bound = trim(d.substr(gt + 1));
          if (!bound.empty() && bound[0] == '=') bound = trim(bound.substr(1));
          if (bound != "0")
            throw std::runtime_error("problem line " + std::to_string(lineno) +
                                     ": only '> 0' declarations supported");
          decl.positive = true;
        } else {
          decl.name = d;
        }
        p.goal.vars.push_back(decl);
      }
    } else if (key == "assume") {
      p.goal.hypotheses.push_back(parse_relation(val));
    } else if (key == "prove") {
      if (have_prove)
        throw std::runtime_error("problem line " + std::to_string(lineno) +
                                 ": multiple prove lines");
      p.goal.conclusion = parse_relation(val);
      have_prove = true;
    } else {
      throw std::runtime_error("problem line " + std::to_string(lineno) + ": unknown key '" + key +
                               "'");
    }
  }
  if (!have_prove) throw std::runtime_error("problem file has no prove line");

  // Every identifier must be declared.
  std::set<std::string> declared;
  for (const auto& v : p.goal.vars) declared.insert(v.name);
  auto check = [&](const ExprPtr& e) {
    for (const auto& v : free_vars(e))
      if (!declared.count(v)) throw std::runtime_error("undeclared identifier '" + v + "'");
  };
  for (const auto& h : p.goal.hypotheses) {
    check(h.lhs);
    check(h.rhs);
  }
  check(p.goal.conclusion.lhs);
  check(p.goal.conclusion.rhs);

  // Positivity flags double as hypotheses everywhere; keep them explicit.
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Problem p = parse_problem(ss.str());
  if (p.name.empty()) {
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = base.find_last_of('.');
    p.name = dot == std::string::npos ? base : base.substr(0, dot);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Sampling

double hypothesis_residual(const ProofGoal& g, const std::map<std::string, double>& point) {
  double worst = 0;
  auto bump = [&](double v) { worst = std::max(worst, v); };
  for (const auto& v : g.vars) {
    if (!v.positive) continue;
    auto it = point.find(v.name);
    if (it == point.end()) return std::numeric_limits<double>::infinity();
    bump(-std::min(0.0, it->second));
  }
  for (const auto& h : g.hypotheses) {
    auto l = evaluate(h.lhs, point);
    auto r = evaluate(h.rhs, point);
    if (!l || !r) return std::numeric_limits<double>::infinity();
    double d = *l - *r;
    switch (h.op) {
      case RelOp::Eq: bump(std::fabs(d)); break;
      case RelOp::Le:
      case RelOp::Lt: bump(std::max(0.0, d)); break;
      case RelOp::Ge:
      case RelOp::Gt: bump(std::max(0.0, -d)); break;
    }
  }
  return worst;
}

std::optional<double> conclusion_violation(const ProofGoal& g,
                                           const std::map<std::string, double>& point) {
  Relation le = conclusion_as_le(g);
  auto l = evaluate(le.lhs, point);
  auto r = evaluate(le.rhs, point);
  if (!l || !r) return std::nullopt;
  if (le.op == RelOp::Eq) return std::fabs(*l - *r);
  return *l - *r;  // positive = violated (lhs exceeds rhs)
}

bool restore_feasibility(const ProofGoal& g, std::map<std::string, double>& point,
                         const SampleOptions& opts) {
  std::vector<ExprPtr> residuals;
  for (const auto& h : g.hypotheses)
    if (h.op == RelOp::Eq) residuals.push_back(sub(h.lhs, h.rhs));
  if (residuals.empty()) return true;

  std::vector<std::string> names = g.var_names();
  const size_t n = names.size();
  std::vector<std::vector<ExprPtr>> jac(residuals.size());
  for (size_t i = 0; i < residuals.size(); ++i)
    for (const auto& v : names) jac[i].push_back(derivative(residuals[i], v));

  for (int iter = 0; iter < opts.projection_iters; ++iter) {
    std::vector<double> r(residuals.size());
    double worst = 0;
    for (size_t i = 0; i < residuals.size(); ++i) {
      auto v = evaluate(residuals[i], point);
      if (!v) return false;
      r[i] = *v;
      worst = std::max(worst, std::fabs(*v));
    }
    if (worst < 1e-13) return true;

    std::vector<std::vector<double>> J(residuals.size(), std::vector<double>(n));
    for (size_t i = 0; i < residuals.size(); ++i) {
      for (size_t j = 0; j < n; ++j) {
        auto v = evaluate(jac[i][j], point);
        if (!v) return false;
        J[i][j] = *v;
      }
    }
    // Gauss-Newton step via normal equations with Levenberg damping.
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
      for (size_t k = 0; k < n; ++k)
        for (size_t i = 0; i < residuals.size(); ++i) A[j][k] += J[i][j] * J[i][k];
      A[j][j] += 1e-10;
      for (size_t i = 0; i < residuals.size(); ++i) b[j] -= J[i][j] * r[i];
    }
    auto step = solve_linear(A, b);
    if (!step) return false;
    for (size_t j = 0; j < n; ++j) point[names[j]] += (*step)[j];
  }
  double final_worst = 0;
  for (const auto& res : residuals) {
    auto v = evaluate(res, point);
    if (!v) return false;
    final_worst = std::max(final_worst, std::fabs(*v));
  }
  return final_worst < 1e-9;
}

std::vector<std::map<std::string, double>> sample_feasible(const ProofGoal& g, std::mt19937_64& rng,
                                                           int n, const SampleOptions& opts) {
  std::vector<std::map<std::string, double>> out;
  std::uniform_real_distribution<double> mag(std::log10(opts.min_magnitude),
                                             std::log10(opts.max_magnitude));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < opts.max_attempts_per_point && !ok; ++attempt) {
      std::map<std::string, double> point;
      for (const auto& v : g.vars) {
        double x = std::pow(10.0, mag(rng));
        if (!v.positive && coin(rng) < 0.5) x = -x;
        point[v.name] = x;
      }
      if (!restore_feasibility(g, point, opts)) continue;
      bool strict_ok = true;
      for (const auto& v : g.vars)
        if (v.positive && point[v.name] < opts.strict_margin) strict_ok = false;
      if (!strict_ok) continue;
      double resid = hypothesis_residual(g, point);
      if (resid > 1e-9) continue;
      // Strict inequality hypotheses need some slack.
      for (const auto& h : g.hypotheses) {
        if (h.op != RelOp::Lt && h.op != RelOp::Gt) continue;
        auto l = evaluate(h.lhs, point);
        auto r = evaluate(h.rhs, point);
        if (!l || !r || std::fabs(*l - *r) < opts.strict_margin) strict_ok = false;
      }
      if (!strict_ok) continue;
      out.push_back(std::move(point));
      ok = true;
    }
  }
  return out;
}

}  // namespace ineq
