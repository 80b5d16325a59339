#include "ineq/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

namespace ineq {

namespace {

ExprPtr node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool const_eq(const ExprPtr& e, long n) { return e->op == Op::Const && e->value == n; }

}  // namespace

ExprPtr constant(const Rat& q) {
  Rat c = q;
  c.canonicalize();
  return node(Expr(Op::Const, c));
}

ExprPtr constant(long n) { return constant(Rat(n)); }

ExprPtr variable(const std::string& name) { return node(Expr(Op::Var, name)); }

ExprPtr neg(ExprPtr x) {
  if (x->op == Op::Const) return constant(Rat(-x->value));
  if (x->op == Op::Neg) return x->a;
  return node(Expr(Op::Neg, std::move(x)));
}

ExprPtr sqrt_(ExprPtr x) {
  if (x->op == Op::Const && x->value >= 0) {
    if (auto r = rat_root(x->value, 2)) return constant(*r);
  }
  return node(Expr(Op::Sqrt, std::move(x)));
}

ExprPtr exp_(ExprPtr x) {
  if (const_eq(x, 0)) return constant(1);
  return node(Expr(Op::Exp, std::move(x)));
}

ExprPtr log_(ExprPtr x) {
  if (const_eq(x, 1)) return constant(0);
  return node(Expr(Op::Log, std::move(x)));
}

ExprPtr abs_(ExprPtr x) {
  if (x->op == Op::Const) return constant(Rat(abs(x->value)));
  return node(Expr(Op::Abs, std::move(x)));
}

ExprPtr add(ExprPtr x, ExprPtr y) {
  if (x->op == Op::Const && y->op == Op::Const) return constant(Rat(x->value + y->value));
  if (const_eq(x, 0)) return y;
  if (const_eq(y, 0)) return x;
  return node(Expr(Op::Add, std::move(x), std::move(y)));
}

ExprPtr sub(ExprPtr x, ExprPtr y) {
  if (x->op == Op::Const && y->op == Op::Const) return constant(Rat(x->value - y->value));
  if (const_eq(y, 0)) return x;
  if (const_eq(x, 0)) return neg(y);
  return node(Expr(Op::Sub, std::move(x), std::move(y)));
}

ExprPtr mul(ExprPtr x, ExprPtr y) {
  if (x->op == Op::Const && y->op == Op::Const) return constant(Rat(x->value * y->value));
  if (const_eq(x, 0) || const_eq(y, 0)) return constant(0);
  if (const_eq(x, 1)) return y;
  if (const_eq(y, 1)) return x;
  if (const_eq(x, -1)) return neg(y);
  if (const_eq(y, -1)) return neg(x);
  // c * (n / d) with constant c, d: fold the coefficient through.
  if (x->op == Op::Const && y->op == Op::Div && y->b->op == Op::Const && y->b->value != 0)
    return mul(constant(Rat(x->value / y->b->value)), y->a);
  if (y->op == Op::Const && x->op == Op::Div && x->b->op == Op::Const && x->b->value != 0)
    return mul(constant(Rat(y->value / x->b->value)), x->a);
  return node(Expr(Op::Mul, std::move(x), std::move(y)));
}

ExprPtr div(ExprPtr x, ExprPtr y) {
  if (x->op == Op::Const && y->op == Op::Const && y->value != 0)
    return constant(Rat(x->value / y->value));
  if (const_eq(y, 1)) return x;
  if (const_eq(y, -1)) return neg(x);
  return node(Expr(Op::Div, std::move(x), std::move(y)));
}

ExprPtr pow_(ExprPtr x, ExprPtr y) {
  if (y->op == Op::Const) {
    const Rat& q = y->value;
    if (q == 1) return x;
    if (q == 0) return constant(1);
    if (q == Rat(1, 2)) return sqrt_(std::move(x));
    // (x^a)^b = x^(ab) for positive integer a, b.
    if (x->op == Op::Pow && x->b->op == Op::Const && rat_is_integer(x->b->value) &&
        x->b->value > 0 && rat_is_integer(q) && q > 0)
      return pow_(x->a, constant(Rat(x->b->value * q)));
    if (x->op == Op::Const) {
      if (rat_is_integer(q)) {
        if (auto e = rat_to_long(q))
          if (auto r = rat_pow_int(x->value, *e)) return constant(*r);
      } else {
        // p/k exponent: exact k-th root first, then integer power.
        auto den = q.get_den();
        auto num = q.get_num();
        if (den.fits_ulong_p() && num.fits_slong_p()) {
          if (auto root = rat_root(x->value, den.get_ui()))
            if (auto r = rat_pow_int(*root, num.get_si())) return constant(*r);
        }
      }
    }
    // (sqrt c)^(2m) folds back for constant c >= 0.
    if (x->op == Op::Sqrt && x->a->op == Op::Const && x->a->value >= 0 && rat_is_integer(q)) {
      if (auto e = rat_to_long(q)) {
        if (*e > 0 && *e % 2 == 0)
          if (auto r = rat_pow_int(x->a->value, *e / 2)) return constant(*r);
      }
    }
  }
  return node(Expr(Op::Pow, std::move(x), std::move(y)));
}

ExprPtr make_unary(Op op, ExprPtr x) {
  switch (op) {
    case Op::Neg: return neg(std::move(x));
    case Op::Sqrt: return sqrt_(std::move(x));
    case Op::Exp: return exp_(std::move(x));
    case Op::Log: return log_(std::move(x));
    case Op::Abs: return abs_(std::move(x));
    default: throw std::logic_error("make_unary: not a unary op");
  }
}

ExprPtr make_binary(Op op, ExprPtr x, ExprPtr y) {
  switch (op) {
    case Op::Add: return add(std::move(x), std::move(y));
    case Op::Sub: return sub(std::move(x), std::move(y));
    case Op::Mul: return mul(std::move(x), std::move(y));
    case Op::Div: return div(std::move(x), std::move(y));
    case Op::Pow: return pow_(std::move(x), std::move(y));
    default: throw std::logic_error("make_binary: not a binary op");
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Parser {
  const std::string& text;
  size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool eat(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos;
        e = add(e, parse_term());
      } else if (c == '-') {
        ++pos;
        e = sub(e, parse_term());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    for (;;) {
      char c = peek();
      if (c == '*') {
        ++pos;
        e = mul(e, parse_factor());
      } else if (c == '/') {
        ++pos;
        e = div(e, parse_factor());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_factor() {
    ExprPtr base = parse_base();
    if (peek() == '^') {
      ++pos;
      return pow_(base, parse_factor());
    }
    return base;
  }

  ExprPtr parse_base() {
    char c = peek();
    if (c == '-') {
      ++pos;
      return neg(parse_factor());
    }
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }

  ExprPtr parse_number() {
    size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      size_t save = pos;
      ++pos;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
      if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      } else {
        pos = save;  // 'e' belongs to an identifier following the number
      }
    }
    auto q = rat_from_string(text.substr(start, pos - start));
    if (!q) throw ParseError("malformed number", start);
    return constant(*q);
  }

  ExprPtr parse_ident() {
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);
    if (peek() == '(') {
      ++pos;
      std::vector<ExprPtr> args;
      args.push_back(parse_expr());
      while (eat(',')) args.push_back(parse_expr());
      if (!eat(')')) throw ParseError("expected ')'", pos);
      if (args.size() != 1) throw ParseError("function takes one argument", start);
      if (name == "sqrt") return sqrt_(args[0]);
      if (name == "exp") return exp_(args[0]);
      if (name == "log") return log_(args[0]);
      if (name == "abs") return abs_(args[0]);
      throw ParseError("unknown function '" + name + "'", start);
    }
    return variable(name);
  }
};

}  // namespace

ExprPtr parse_expression(const std::string& text) {
  Parser p(text);
  ExprPtr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
  return e;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence levels: Add/Sub 1, Mul/Div 2, Pow 3, atoms 4.
int precedence(const ExprPtr& e) {
  switch (e->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 1;  // prints as leading '-'
    case Op::Pow: return 3;
    default: return 4;
  }
}

void print_rec(const ExprPtr& e, std::string& out, int min_prec) {
  int prec = precedence(e);
  bool need_paren = prec < min_prec;
  if (e->op == Op::Const && e->value < 0 && min_prec > 1) need_paren = true;
  if (need_paren) out += '(';
  switch (e->op) {
    case Op::Const: out += rat_to_string(e->value); break;
    case Op::Var: out += e->name; break;
    case Op::Neg:
      out += '-';
      print_rec(e->a, out, 3);
      break;
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Abs: {
      const char* fn = e->op == Op::Sqrt ? "sqrt"
                       : e->op == Op::Exp ? "exp"
                       : e->op == Op::Log ? "log"
                                          : "abs";
      out += fn;
      out += '(';
      print_rec(e->a, out, 0);
      out += ')';
      break;
    }
    case Op::Add:
      print_rec(e->a, out, 1);
      out += " + ";
      print_rec(e->b, out, 2);
      break;
    case Op::Sub:
      print_rec(e->a, out, 1);
      out += " - ";
      print_rec(e->b, out, 2);
      break;
    case Op::Mul:
      print_rec(e->a, out, 2);
      out += '*';
      print_rec(e->b, out, 3);
      break;
    case Op::Div:
      print_rec(e->a, out, 2);
      out += '/';
      print_rec(e->b, out, 3);
      break;
    case Op::Pow:
      print_rec(e->a, out, 4);
      out += '^';
      print_rec(e->b, out, 4);
      break;
  }
  if (need_paren) out += ')';
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  std::string out;
  print_rec(e, out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Structure

double syntactic_degree(const ExprPtr& e) {
  switch (e->op) {
    case Op::Const: return 0;
    case Op::Var: return 1;
    case Op::Neg:
    case Op::Exp:
    case Op::Log:
    case Op::Abs: return syntactic_degree(e->a);
    case Op::Sqrt: return syntactic_degree(e->a) / 2;
    case Op::Add:
    case Op::Sub: return std::max(syntactic_degree(e->a), syntactic_degree(e->b));
    case Op::Mul: return syntactic_degree(e->a) + syntactic_degree(e->b);
    case Op::Div: return syntactic_degree(e->a) - syntactic_degree(e->b);
    case Op::Pow: {
      double base = syntactic_degree(e->a);
      if (e->b->op == Op::Const) return base * rat_to_double(e->b->value);
      return base * 2;
    }
  }
  return 0;
}

bool equal(const ExprPtr& x, const ExprPtr& y) {
  if (x.get() == y.get()) return true;
  if (x->op != y->op) return false;
  switch (x->op) {
    case Op::Const: return x->value == y->value;
    case Op::Var: return x->name == y->name;
    case Op::Neg:
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Abs: return equal(x->a, y->a);
    default: return equal(x->a, y->a) && equal(x->b, y->b);
  }
}

size_t hash_expr(const ExprPtr& e) {
  size_t h = static_cast<size_t>(e->op) * 0x9e3779b97f4a7c15ull;
  auto mix = [&h](size_t v) { h = (h ^ v) * 0x100000001b3ull; };
  switch (e->op) {
    case Op::Const: mix(std::hash<std::string>{}(rat_to_string(e->value))); break;
    case Op::Var: mix(std::hash<std::string>{}(e->name)); break;
    case Op::Neg:
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Abs: mix(hash_expr(e->a)); break;
    default:
      mix(hash_expr(e->a));
      mix(hash_expr(e->b));
  }
  return h;
}

int compare(const ExprPtr& x, const ExprPtr& y) {
  double dx = syntactic_degree(x), dy = syntactic_degree(y);
  if (dx + 1e-9 < dy) return -1;
  if (dy + 1e-9 < dx) return 1;
  std::string sx = to_string(x), sy = to_string(y);
  if (sx < sy) return -1;
  if (sx > sy) return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

void flatten_sum(const ExprPtr& e, bool negated, std::vector<std::pair<bool, ExprPtr>>& out) {
  switch (e->op) {
    case Op::Add:
      flatten_sum(e->a, negated, out);
      flatten_sum(e->b, negated, out);
      return;
    case Op::Sub:
      flatten_sum(e->a, negated, out);
      flatten_sum(e->b, !negated, out);
      return;
    case Op::Neg: flatten_sum(e->a, !negated, out); return;
    default: break;
  }
  if (e->op == Op::Const && e->value < 0) {
    out.emplace_back(!negated, constant(Rat(-e->value)));
  } else {
    out.emplace_back(negated, e);
  }
}

void flatten_product(const ExprPtr& e, std::vector<ExprPtr>& out, bool& negative) {
  if (e->op == Op::Mul) {
    flatten_product(e->a, out, negative);
    flatten_product(e->b, out, negative);
    return;
  }
  if (e->op == Op::Neg) {
    negative = !negative;
    flatten_product(e->a, out, negative);
    return;
  }
  out.push_back(e);
}

}  // namespace

std::vector<std::pair<bool, ExprPtr>> sum_terms(const ExprPtr& e) {
  std::vector<std::pair<bool, ExprPtr>> out;
  flatten_sum(e, false, out);
  return out;
}

std::vector<ExprPtr> product_factors(const ExprPtr& e, bool& negative) {
  std::vector<ExprPtr> out;
  flatten_product(e, out, negative);
  return out;
}

ExprPtr rebuild_sum(const std::vector<std::pair<bool, ExprPtr>>& terms) {
  if (terms.empty()) return constant(0);
  ExprPtr acc = terms[0].first ? neg(terms[0].second) : terms[0].second;
  for (size_t i = 1; i < terms.size(); ++i)
    acc = terms[i].first ? sub(acc, terms[i].second) : add(acc, terms[i].second);
  return acc;
}

ExprPtr rebuild_product(const std::vector<ExprPtr>& factors, bool negative) {
  ExprPtr acc = factors.empty() ? constant(1) : factors[0];
  for (size_t i = 1; i < factors.size(); ++i) acc = mul(acc, factors[i]);
  return negative ? neg(acc) : acc;
}

ExprPtr canonical(const ExprPtr& e) {
  switch (e->op) {
    case Op::Const:
    case Op::Var: return e;
    case Op::Neg: return neg(canonical(e->a));
    case Op::Sqrt: return sqrt_(canonical(e->a));
    case Op::Exp: return exp_(canonical(e->a));
    case Op::Log: return log_(canonical(e->a));
    case Op::Abs: return abs_(canonical(e->a));
    case Op::Div: {
      ExprPtr num = canonical(e->a);
      ExprPtr den = canonical(e->b);
      // A constant denominator is just a coefficient.
      if (den->op == Op::Const && den->value != 0)
        return canonical(mul(constant(Rat(1 / den->value)), num));
      return div(num, den);
    }
    case Op::Pow: return pow_(canonical(e->a), canonical(e->b));
    case Op::Add:
    case Op::Sub: {
      std::vector<std::pair<bool, ExprPtr>> terms;
      flatten_sum(e, false, terms);
      for (auto& [sign, t] : terms) t = canonical(t);
      // Constants merge into a single trailing term.
      Rat c(0);
      std::vector<std::pair<bool, ExprPtr>> rest;
      for (auto& [sign, t] : terms) {
        if (t->op == Op::Const)
          c += sign ? Rat(-t->value) : t->value;
        else
          rest.emplace_back(sign, t);
      }
      // Sums print leading terms of highest degree first.
      std::stable_sort(rest.begin(), rest.end(), [](const auto& lhs, const auto& rhs) {
        int c2 = compare(lhs.second, rhs.second);
        if (c2 != 0) return c2 > 0;
        return lhs.first < rhs.first;
      });
      if (c != 0) rest.emplace_back(c < 0, constant(Rat(abs(c))));
      if (rest.empty()) return constant(0);
      ExprPtr acc = rest[0].first ? neg(rest[0].second) : rest[0].second;
      for (size_t i = 1; i < rest.size(); ++i)
        acc = rest[i].first ? sub(acc, rest[i].second) : add(acc, rest[i].second);
      return acc;
    }
    case Op::Mul: {
      std::vector<ExprPtr> factors;
      bool negative = false;
      flatten_product(e, factors, negative);
      for (auto& f : factors) f = canonical(f);
      Rat coeff(1);
      std::vector<ExprPtr> rest;
      for (auto& f : factors) {
        if (f->op == Op::Const)
          coeff *= f->value;
        else
          rest.push_back(f);
      }
      if (negative) coeff = -coeff;
      if (coeff == 0) return constant(0);
      std::sort(rest.begin(), rest.end(),
                [](const ExprPtr& lhs, const ExprPtr& rhs) { return compare(lhs, rhs) < 0; });
      bool flip = coeff < 0;
      Rat mag = abs(coeff);
      // Distribute a non-unit coefficient over a lone sum factor, so that
      // 3*(a^2+b^2) and 3*a^2 + 3*b^2 share one canonical form.
      if (rest.size() == 1 && (rest[0]->op == Op::Add || rest[0]->op == Op::Sub) && mag != 1) {
        auto terms = sum_terms(rest[0]);
        for (auto& [s, t] : terms) t = mul(constant(mag), t);
        ExprPtr distributed = canonical(rebuild_sum(terms));
        return flip ? neg(distributed) : distributed;
      }
      ExprPtr acc;
      if (rest.empty()) {
        acc = constant(mag);
      } else {
        acc = mag == 1 ? rest[0] : mul(constant(mag), rest[0]);
        for (size_t i = 1; i < rest.size(); ++i) acc = mul(acc, rest[i]);
      }
      return flip ? neg(acc) : acc;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

std::optional<double> evaluate(const ExprPtr& e, const std::map<std::string, double>& point) {
  auto fin = [](double v) -> std::optional<double> {
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  };
  switch (e->op) {
    case Op::Const: return rat_to_double(e->value);
    case Op::Var: {
      auto it = point.find(e->name);
      if (it == point.end()) return std::nullopt;
      return it->second;
    }
    case Op::Neg: {
      auto v = evaluate(e->a, point);
      if (!v) return std::nullopt;
      return -*v;
    }
    case Op::Sqrt: {
      auto v = evaluate(e->a, point);
      if (!v || *v < 0) return std::nullopt;
      return fin(std::sqrt(*v));
    }
    case Op::Exp: {
      auto v = evaluate(e->a, point);
      if (!v) return std::nullopt;
      return fin(std::exp(*v));
    }
    case Op::Log: {
      auto v = evaluate(e->a, point);
      if (!v || *v <= 0) return std::nullopt;
      return fin(std::log(*v));
    }
    case Op::Abs: {
      auto v = evaluate(e->a, point);
      if (!v) return std::nullopt;
      return std::fabs(*v);
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: {
      auto x = evaluate(e->a, point);
      auto y = evaluate(e->b, point);
      if (!x || !y) return std::nullopt;
      switch (e->op) {
        case Op::Add: return fin(*x + *y);
        case Op::Sub: return fin(*x - *y);
        case Op::Mul: return fin(*x * *y);
        case Op::Div:
          if (*y == 0) return std::nullopt;
          return fin(*x / *y);
        case Op::Pow: {
          if (*x == 0 && *y < 0) return std::nullopt;
          if (*x == 0 && *y == 0) return 1.0;
          double r = std::pow(*x, *y);
          return fin(r);
        }
        default: return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

std::optional<Rat> evaluate_exact(const ExprPtr& e, const std::map<std::string, Rat>& point) {
  switch (e->op) {
    case Op::Const: return e->value;
    case Op::Var: {
      auto it = point.find(e->name);
      if (it == point.end()) return std::nullopt;
      return it->second;
    }
    case Op::Neg: {
      auto v = evaluate_exact(e->a, point);
      if (!v) return std::nullopt;
      return Rat(-*v);
    }
    case Op::Abs: {
      auto v = evaluate_exact(e->a, point);
      if (!v) return std::nullopt;
      return Rat(abs(*v));
    }
    case Op::Sqrt: {
      auto v = evaluate_exact(e->a, point);
      if (!v || *v < 0) return std::nullopt;
      return rat_root(*v, 2);
    }
    case Op::Exp: {
      auto v = evaluate_exact(e->a, point);
      if (!v || *v != 0) return std::nullopt;
      return Rat(1);
    }
    case Op::Log: {
      auto v = evaluate_exact(e->a, point);
      if (!v || *v != 1) return std::nullopt;
      return Rat(0);
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: {
      auto x = evaluate_exact(e->a, point);
      auto y = evaluate_exact(e->b, point);
      if (!x || !y) return std::nullopt;
      switch (e->op) {
        case Op::Add: return Rat(*x + *y);
        case Op::Sub: return Rat(*x - *y);
        case Op::Mul: return Rat(*x * *y);
        case Op::Div:
          if (*y == 0) return std::nullopt;
          return Rat(*x / *y);
        case Op::Pow: {
          if (rat_is_integer(*y)) {
            auto n = rat_to_long(*y);
            if (!n) return std::nullopt;
            return rat_pow_int(*x, *n);
          }
          auto den = y->get_den();
          auto num = y->get_num();
          if (!den.fits_ulong_p() || !num.fits_slong_p()) return std::nullopt;
          auto root = rat_root(*x, den.get_ui());
          if (!root) return std::nullopt;
          return rat_pow_int(*root, num.get_si());
        }
        default: return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::set<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
    if (x->op == Op::Var) out.insert(x->name);
    if (x->a) walk(x->a);
    if (x->b) walk(x->b);
  };
  walk(e);
  return out;
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& mapping) {
  switch (e->op) {
    case Op::Const: return e;
    case Op::Var: {
      auto it = mapping.find(e->name);
      return it == mapping.end() ? e : it->second;
    }
    case Op::Neg:
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Abs: return make_unary(e->op, substitute(e->a, mapping));
    default: return make_binary(e->op, substitute(e->a, mapping), substitute(e->b, mapping));
  }
}

ExprPtr derivative(const ExprPtr& e, const std::string& var) {
  switch (e->op) {
    case Op::Const: return constant(0);
    case Op::Var: return constant(e->name == var ? 1 : 0);
    case Op::Neg: return neg(derivative(e->a, var));
    case Op::Sqrt:
      // a' / (2 sqrt a)
      return div(derivative(e->a, var), mul(constant(2), sqrt_(e->a)));
    case Op::Exp: return mul(exp_(e->a), derivative(e->a, var));
    case Op::Log: return div(derivative(e->a, var), e->a);
    case Op::Abs:
      // (a/|a|) a'; undefined at the kink, as it should be.
      return mul(div(e->a, abs_(e->a)), derivative(e->a, var));
    case Op::Add: return add(derivative(e->a, var), derivative(e->b, var));
    case Op::Sub: return sub(derivative(e->a, var), derivative(e->b, var));
    case Op::Mul:
      return add(mul(derivative(e->a, var), e->b), mul(e->a, derivative(e->b, var)));
    case Op::Div:
      return div(sub(mul(derivative(e->a, var), e->b), mul(e->a, derivative(e->b, var))),
                 pow_(e->b, constant(2)));
    case Op::Pow: {
      if (e->b->op == Op::Const) {
        const Rat& c = e->b->value;
        return mul(mul(constant(c), pow_(e->a, constant(Rat(c - 1)))), derivative(e->a, var));
      }
      // a^b * (b' log a + b a'/a)
      return mul(pow_(e->a, e->b),
                 add(mul(derivative(e->b, var), log_(e->a)),
                     mul(e->b, div(derivative(e->a, var), e->a))));
    }
  }
  return constant(0);
}

}  // namespace ineq
