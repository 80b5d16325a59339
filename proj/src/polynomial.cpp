#include "ineq/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace ineq {

Polynomial Polynomial::constant_poly(const Rat& c, std::vector<std::string> vars) {
  Polynomial p(std::move(vars));
  if (c != 0) p.terms_[Exponents(p.vars_.size(), 0)] = c;
  return p;
}

Polynomial Polynomial::variable_poly(const std::string& name) {
  Polynomial p({name});
  p.terms_[{1}] = 1;
  return p;
}

bool Polynomial::is_constant() const {
  if (terms_.empty()) return true;
  return terms_.size() == 1 && degree_of(terms_.begin()->first) == 0;
}

Rat Polynomial::constant_value() const {
  if (terms_.empty()) return Rat(0);
  return terms_.begin()->second;
}

void Polynomial::add_term(const Exponents& exps, const Rat& coeff) {
  if (coeff == 0) return;
  auto it = terms_.find(exps);
  if (it == terms_.end()) {
    terms_[exps] = coeff;
  } else {
    it->second += coeff;
    if (it->second == 0) terms_.erase(it);
  }
}

unsigned Polynomial::degree_of(const Exponents& e) {
  unsigned d = 0;
  for (unsigned x : e) d += x;
  return d;
}

unsigned Polynomial::total_degree() const {
  unsigned d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, degree_of(e));
  return d;
}

Polynomial Polynomial::with_vars(const std::vector<std::string>& vars) const {
  Polynomial out(vars);
  std::vector<int> remap(vars_.size(), -1);
  for (size_t i = 0; i < vars_.size(); ++i) {
    auto it = std::find(vars.begin(), vars.end(), vars_[i]);
    if (it == vars.end()) throw std::logic_error("with_vars: missing variable " + vars_[i]);
    remap[i] = static_cast<int>(it - vars.begin());
  }
  for (const auto& [e, c] : terms_) {
    Exponents ne(vars.size(), 0);
    for (size_t i = 0; i < e.size(); ++i) ne[remap[i]] = e[i];
    out.terms_[ne] = c;
  }
  return out;
}

std::pair<Polynomial, Polynomial> Polynomial::align(const Polynomial& a, const Polynomial& b) {
  std::vector<std::string> vars = a.vars_;
  for (const auto& v : b.vars_)
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  std::sort(vars.begin(), vars.end());
  return {a.with_vars(vars), b.with_vars(vars)};
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  auto [x, y] = align(*this, o);
  for (const auto& [e, c] : y.terms_) x.add_term(e, c);
  return x;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  auto [x, y] = align(*this, o);
  for (const auto& [e, c] : y.terms_) x.add_term(e, Rat(-c));
  return x;
}

Polynomial Polynomial::operator-() const {
  Polynomial out(vars_);
  for (const auto& [e, c] : terms_) out.terms_[e] = -c;
  return out;
}

Polynomial Polynomial::operator*(const Rat& k) const {
  Polynomial out(vars_);
  if (k == 0) return out;
  for (const auto& [e, c] : terms_) out.terms_[e] = c * k;
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  auto [x, y] = align(*this, o);
  Polynomial out(x.vars_);
  for (const auto& [e1, c1] : x.terms_) {
    for (const auto& [e2, c2] : y.terms_) {
      Exponents e(e1.size());
      for (size_t i = 0; i < e.size(); ++i) e[i] = e1[i] + e2[i];
      out.add_term(e, Rat(c1 * c2));
    }
  }
  return out;
}

bool Polynomial::operator==(const Polynomial& o) const {
  auto [x, y] = align(*this, o);
  return x.terms_ == y.terms_;
}

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial result = constant_poly(Rat(1), vars_);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    base = k > 1 ? base * base : base;
    k >>= 1;
  }
  return result;
}

double Polynomial::evaluate(const std::map<std::string, double>& point) const {
  double sum = 0;
  for (const auto& [e, c] : terms_) {
    double t = rat_to_double(c);
    for (size_t i = 0; i < e.size(); ++i)
      for (unsigned k = 0; k < e[i]; ++k) t *= point.at(vars_[i]);
    sum += t;
  }
  return sum;
}

Rat Polynomial::evaluate_exact(const std::map<std::string, Rat>& point) const {
  Rat sum(0);
  for (const auto& [e, c] : terms_) {
    Rat t = c;
    for (size_t i = 0; i < e.size(); ++i)
      for (unsigned k = 0; k < e[i]; ++k) t *= point.at(vars_[i]);
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::compose(const std::map<std::string, Polynomial>& images) const {
  Polynomial out;
  for (const auto& [e, c] : terms_) {
    Polynomial term = constant_poly(c);
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      auto it = images.find(vars_[i]);
      Polynomial base = it != images.end() ? it->second : variable_poly(vars_[i]);
      term = term * base.pow(e[i]);
    }
    out = out + term;
  }
  return out;
}

Polynomial Polynomial::truncate(unsigned max_total_degree) const {
  Polynomial out(vars_);
  for (const auto& [e, c] : terms_)
    if (degree_of(e) <= max_total_degree) out.terms_[e] = c;
  return out;
}

ExprPtr Polynomial::to_expression() const {
  if (terms_.empty()) return constant(0);
  std::vector<std::pair<Exponents, Rat>> ordered(terms_.begin(), terms_.end());
  // Graded lex, highest degree first.
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    unsigned da = degree_of(a.first), db = degree_of(b.first);
    if (da != db) return da > db;
    return a.first > b.first;
  });
  ExprPtr acc;
  bool first = true;
  for (const auto& [e, c] : ordered) {
    ExprPtr term;
    Rat mag = abs(c);
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      ExprPtr p = e[i] == 1 ? variable(vars_[i]) : pow_(variable(vars_[i]), constant(long(e[i])));
      term = term ? mul(term, p) : p;
    }
    if (!term)
      term = constant(mag);
    else if (mag != 1)
      term = mul(constant(mag), term);
    if (first) {
      acc = c < 0 ? neg(term) : term;
      first = false;
    } else {
      acc = c < 0 ? sub(acc, term) : add(acc, term);
    }
  }
  return acc;
}

std::string Polynomial::str() const { return to_string(to_expression()); }

std::pair<Polynomial::Exponents, Rat> Polynomial::lex_leading() const {
  if (terms_.empty()) throw std::logic_error("lex_leading of zero polynomial");
  auto it = std::prev(terms_.end());
  return {it->first, it->second};
}

namespace {

bool divides(const Polynomial::Exponents& a, const Polynomial::Exponents& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

}  // namespace

Polynomial Polynomial::reduce_modulo(const std::vector<Polynomial>& basis) const {
  // Align everything over a common variable set.
  std::vector<std::string> vars = vars_;
  for (const auto& b : basis)
    for (const auto& v : b.vars())
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  std::sort(vars.begin(), vars.end());

  Polynomial r = with_vars(vars);
  std::vector<Polynomial> bs;
  for (const auto& b : basis)
    if (!b.is_zero()) bs.push_back(b.with_vars(vars));

  bool changed = true;
  while (changed && !r.is_zero()) {
    changed = false;
    for (auto it = r.terms_.rbegin(); it != r.terms_.rend() && !changed; ++it) {
      for (const auto& b : bs) {
        auto [lead, lc] = b.lex_leading();
        if (!divides(lead, it->first)) continue;
        Exponents q(lead.size());
        for (size_t i = 0; i < q.size(); ++i) q[i] = it->first[i] - lead[i];
        Polynomial quotient(vars);
        quotient.add_term(q, Rat(it->second / lc));
        r = r - quotient * b;
        changed = true;
        break;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

Polynomial normalize_polynomial(const ExprPtr& e) {
  switch (e->op) {
    case Op::Const: return Polynomial::constant_poly(e->value);
    case Op::Var: return Polynomial::variable_poly(e->name);
    case Op::Neg: return -normalize_polynomial(e->a);
    case Op::Add: return normalize_polynomial(e->a) + normalize_polynomial(e->b);
    case Op::Sub: return normalize_polynomial(e->a) - normalize_polynomial(e->b);
    case Op::Mul: return normalize_polynomial(e->a) * normalize_polynomial(e->b);
    case Op::Div: {
      Polynomial den = normalize_polynomial(e->b);
      if (!den.is_constant() || den.is_zero())
        throw NotPolynomial("division by non-constant or zero");
      return normalize_polynomial(e->a) * Rat(1 / den.constant_value());
    }
    case Op::Pow: {
      if (e->b->op != Op::Const || !rat_is_integer(e->b->value))
        throw NotPolynomial("non-integer exponent");
      auto k = rat_to_long(e->b->value);
      if (!k || *k < 0) throw NotPolynomial("negative or oversized exponent");
      return normalize_polynomial(e->a).pow(static_cast<unsigned>(*k));
    }
    case Op::Sqrt: throw NotPolynomial("sqrt");
    case Op::Exp: throw NotPolynomial("exp");
    case Op::Log: throw NotPolynomial("log");
    case Op::Abs: throw NotPolynomial("abs");
  }
  throw NotPolynomial("unknown node");
}

// ---------------------------------------------------------------------------

namespace {

bool contains_abs_kink(const ExprPtr& e, const std::map<std::string, double>& center) {
  if (e->op == Op::Abs) {
    auto v = evaluate(e->a, center);
    if (v && std::fabs(*v) < 1e-12) return true;
  }
  if (e->a && contains_abs_kink(e->a, center)) return true;
  if (e->b && contains_abs_kink(e->b, center)) return true;
  return false;
}

// Exact value when the expression is rational-valued at the center; otherwise
// the IEEE double converted exactly to a rational.
std::optional<Rat> value_at(const ExprPtr& e, const Assignment& center) {
  if (center.exact.size() == center.vals.size()) {
    if (auto q = evaluate_exact(e, center.exact)) return q;
  }
  auto v = evaluate(e, center.vals);
  if (!v) return std::nullopt;
  return Rat(*v);
}

}  // namespace

Polynomial taylor_approximate(const ExprPtr& e, const Assignment& center, unsigned degree) {
  // Polynomial inputs take the exact route: expand, then recenter/truncate
  // only when the degree cap actually bites.
  try {
    Polynomial p = normalize_polynomial(e);
    if (p.total_degree() <= degree) return p;
    std::map<std::string, Polynomial> shift, unshift;
    for (const auto& v : p.vars()) {
      double cv = center.vals.count(v) ? center.vals.at(v) : 1.0;
      Rat c = center.exact.count(v) ? center.exact.at(v) : Rat(cv);
      shift[v] = Polynomial::variable_poly(v) + Polynomial::constant_poly(c);
      unshift[v] = Polynomial::variable_poly(v) - Polynomial::constant_poly(c);
    }
    // p(x) -> p(u + c), truncate in u, then u = x - c.
    return p.compose(shift).truncate(degree).compose(unshift);
  } catch (const NotPolynomial&) {
  }

  auto vars_set = free_vars(e);
  std::vector<std::string> vars(vars_set.begin(), vars_set.end());
  std::map<std::string, double> cvals;
  std::map<std::string, Rat> cexact;
  for (const auto& v : vars) {
    double cv = center.vals.count(v) ? center.vals.at(v) : 1.0;
    cvals[v] = cv;
    cexact[v] = center.exact.count(v) ? center.exact.at(v) : Rat(cv);
  }
  if (!evaluate(e, cvals)) throw UndefinedAtCenter();
  if (contains_abs_kink(e, cvals)) throw NonSmooth();

  Assignment c;
  c.vals = cvals;
  c.exact = cexact;

  // Mixed partials, memoized by multi-index.
  std::map<std::vector<unsigned>, ExprPtr> derivs;
  derivs[std::vector<unsigned>(vars.size(), 0)] = e;
  std::function<ExprPtr(const std::vector<unsigned>&)> get_deriv =
      [&](const std::vector<unsigned>& idx) -> ExprPtr {
    auto it = derivs.find(idx);
    if (it != derivs.end()) return it->second;
    for (size_t j = 0; j < idx.size(); ++j) {
      if (idx[j] == 0) continue;
      auto prev = idx;
      prev[j] -= 1;
      ExprPtr d = derivative(get_deriv(prev), vars[j]);
      derivs[idx] = d;
      return d;
    }
    return e;
  };

  // Enumerate multi-indices of total degree <= degree.
  std::vector<std::vector<unsigned>> indices;
  std::vector<unsigned> cur(vars.size(), 0);
  std::function<void(size_t, unsigned)> gen = [&](size_t i, unsigned left) {
    if (i == cur.size()) {
      indices.push_back(cur);
      return;
    }
    for (unsigned k = 0; k <= left; ++k) {
      cur[i] = k;
      gen(i + 1, left - k);
    }
    cur[i] = 0;
  };
  gen(0, degree);

  Polynomial result;
  std::map<std::string, std::vector<Polynomial>> diff_powers;  // (x - c)^k cache
  for (const auto& v : vars) {
    Polynomial d = Polynomial::variable_poly(v) - Polynomial::constant_poly(cexact[v]);
    diff_powers[v] = {Polynomial::constant_poly(Rat(1)), d};
  }
  auto power_of = [&](const std::string& v, unsigned k) -> const Polynomial& {
    auto& cache = diff_powers[v];
    while (cache.size() <= k) cache.push_back(cache.back() * cache[1]);
    return cache[k];
  };

  for (const auto& idx : indices) {
    ExprPtr d = get_deriv(idx);
    auto val = value_at(d, c);
    if (!val) throw UndefinedAtCenter();
    if (*val == 0) continue;
    Rat coeff = *val;
    for (size_t j = 0; j < idx.size(); ++j)
      for (unsigned k = 2; k <= idx[j]; ++k) coeff /= k;  // alpha!
    Polynomial term = Polynomial::constant_poly(coeff);
    for (size_t j = 0; j < idx.size(); ++j)
      if (idx[j] > 0) term = term * power_of(vars[j], idx[j]);
    result = result + term;
  }
  return result;
}

}  // namespace ineq
