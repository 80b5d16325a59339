#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ineq/rational.hpp"

namespace ineq {

enum class Op {
  Const,
  Var,
  Neg,
  Sqrt,
  Exp,
  Log,
  Abs,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree. Constants are exact rationals; all construction
// goes through the smart constructors below, which fold constant
// subexpressions eagerly (sqrt(2) and friends stay symbolic).
struct Expr {
  Op op;
  Rat value;         // Const
  std::string name;  // Var
  ExprPtr a, b;      // unary: a; binary: a, b

  Expr(Op o, Rat v) : op(o), value(std::move(v)) {}
  Expr(Op o, std::string n) : op(o), name(std::move(n)) {}
  Expr(Op o, ExprPtr x) : op(o), a(std::move(x)) {}
  Expr(Op o, ExprPtr x, ExprPtr y) : op(o), a(std::move(x)), b(std::move(y)) {}
};

ExprPtr constant(const Rat& q);
ExprPtr constant(long n);
ExprPtr variable(const std::string& name);
ExprPtr neg(ExprPtr x);
ExprPtr sqrt_(ExprPtr x);
ExprPtr exp_(ExprPtr x);
ExprPtr log_(ExprPtr x);
ExprPtr abs_(ExprPtr x);
ExprPtr add(ExprPtr x, ExprPtr y);
ExprPtr sub(ExprPtr x, ExprPtr y);
ExprPtr mul(ExprPtr x, ExprPtr y);
ExprPtr div(ExprPtr x, ExprPtr y);
ExprPtr pow_(ExprPtr x, ExprPtr y);
ExprPtr make_unary(Op op, ExprPtr x);
ExprPtr make_binary(Op op, ExprPtr x, ExprPtr y);

struct ParseError : std::runtime_error {
  size_t offset;
  ParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' factor)?          -- '^' right-associative
//   base   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')'
//           | '(' expr ')' | '-' factor
// NUMBER is a decimal literal (rationals arise from folding p/q).
// Functions: sqrt, exp, log, abs. Whitespace insignificant.
ExprPtr parse_expression(const std::string& text);

std::string to_string(const ExprPtr& e);

// Sorts commutative operand chains (sums by descending syntactic degree,
// products by ascending), folds summand signs, rebuilds left-associated.
// Idempotent; parse(to_string(canonical(e))) == canonical(e).
ExprPtr canonical(const ExprPtr& e);

bool equal(const ExprPtr& x, const ExprPtr& y);
size_t hash_expr(const ExprPtr& e);
// Total order used for canonical sorting: (syntactic degree, printed form).
int compare(const ExprPtr& x, const ExprPtr& y);

double syntactic_degree(const ExprPtr& e);

std::set<std::string> free_vars(const ExprPtr& e);

// Point in variable space. `vals` is always usable; `exact` carries rational
// values when they are known precisely.
struct Assignment {
  std::map<std::string, double> vals;
  std::map<std::string, Rat> exact;

  static Assignment from_doubles(std::map<std::string, double> v) {
    Assignment a;
    a.vals = std::move(v);
    return a;
  }
  static Assignment from_rationals(const std::map<std::string, Rat>& r) {
    Assignment a;
    a.exact = r;
    for (const auto& [k, q] : r) a.vals[k] = rat_to_double(q);
    return a;
  }
};

// Division by zero, log of a non-positive value, sqrt of a negative value,
// and non-finite intermediate results all yield nullopt ("undefined"), which
// propagates absorbingly. Never throws.
std::optional<double> evaluate(const ExprPtr& e, const std::map<std::string, double>& point);

// Exact evaluation; nullopt when undefined or not rational-valued at the
// point (e.g. sqrt(2)).
std::optional<Rat> evaluate_exact(const ExprPtr& e, const std::map<std::string, Rat>& point);

// Simultaneous substitution; variables absent from the mapping are untouched.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& mapping);

// Partial derivative with respect to `var`, built symbolically.
ExprPtr derivative(const ExprPtr& e, const std::string& var);

inline bool is_const(const ExprPtr& e) { return e->op == Op::Const; }
inline bool is_const(const ExprPtr& e, const Rat& q) {
  return e->op == Op::Const && e->value == q;
}

// Flattened views of +/- and * chains. Sum terms carry a negation flag;
// product factors fold an overall sign into `negative`.
std::vector<std::pair<bool, ExprPtr>> sum_terms(const ExprPtr& e);
std::vector<ExprPtr> product_factors(const ExprPtr& e, bool& negative);
ExprPtr rebuild_sum(const std::vector<std::pair<bool, ExprPtr>>& terms);
ExprPtr rebuild_product(const std::vector<ExprPtr>& factors, bool negative);

}  // namespace ineq
