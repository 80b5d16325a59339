#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ineq/expr.hpp"

namespace ineq {

struct NotPolynomial : std::runtime_error {
  explicit NotPolynomial(const std::string& why) : std::runtime_error("not a polynomial: " + why) {}
};
struct UndefinedAtCenter : std::runtime_error {
  UndefinedAtCenter() : std::runtime_error("expression undefined at expansion center") {}
};
struct NonSmooth : std::runtime_error {
  NonSmooth() : std::runtime_error("expression not smooth at expansion center") {}
};

// Expanded multivariate polynomial with exact rational coefficients.
// Exponent vectors index into `vars` (sorted variable names); no zero
// coefficients are stored.
class Polynomial {
 public:
  using Exponents = std::vector<unsigned>;

  Polynomial() = default;
  explicit Polynomial(std::vector<std::string> vars) : vars_(std::move(vars)) {}

  static Polynomial constant_poly(const Rat& c, std::vector<std::string> vars = {});
  static Polynomial variable_poly(const std::string& name);

  const std::vector<std::string>& vars() const { return vars_; }
  const std::map<Exponents, Rat>& terms() const { return terms_; }
  size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rat constant_value() const;  // 0 for the zero polynomial

  void add_term(const Exponents& exps, const Rat& coeff);
  unsigned total_degree() const;
  static unsigned degree_of(const Exponents& e);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(const Rat& c) const;
  Polynomial operator-() const;
  bool operator==(const Polynomial& o) const;
  Polynomial pow(unsigned k) const;

  // Renames/reorders to the union of both variable sets.
  static std::pair<Polynomial, Polynomial> align(const Polynomial& a, const Polynomial& b);
  Polynomial with_vars(const std::vector<std::string>& vars) const;

  double evaluate(const std::map<std::string, double>& point) const;
  Rat evaluate_exact(const std::map<std::string, Rat>& point) const;

  // Substitutes polynomials for variables (used for the Taylor shift).
  Polynomial compose(const std::map<std::string, Polynomial>& images) const;

  Polynomial truncate(unsigned max_total_degree) const;

  // Canonical expression: graded-lex ordering, exact coefficients.
  ExprPtr to_expression() const;

  std::string str() const;

  // Leading term in lex order (largest exponent vector); requires !is_zero().
  std::pair<Exponents, Rat> lex_leading() const;

  // Remainder of multivariate division by the given polynomials (lex order).
  Polynomial reduce_modulo(const std::vector<Polynomial>& basis) const;

 private:
  std::vector<std::string> vars_;
  std::map<Exponents, Rat> terms_;
};

// Expands +, -, *, integer powers and constant divisions into canonical form.
// Throws NotPolynomial otherwise.
Polynomial normalize_polynomial(const ExprPtr& e);

// Multivariate Taylor polynomial of total degree <= `degree` at `center`,
// computed by symbolic differentiation with exact arithmetic where possible.
// Polynomial inputs of degree <= `degree` are returned exactly.
Polynomial taylor_approximate(const ExprPtr& e, const Assignment& center, unsigned degree);

}  // namespace ineq
