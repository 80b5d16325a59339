#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ineq/expr.hpp"
#include "ineq/polynomial.hpp"

using namespace ineq;

namespace {

Polynomial random_polynomial(std::mt19937_64& rng, int max_vars, int max_degree) {
  static const std::vector<std::string> pool = {"a", "b", "c", "d"};
  std::uniform_int_distribution<int> nvars(1, max_vars);
  std::uniform_int_distribution<int> nterms(1, 6);
  std::uniform_int_distribution<int> coeff(-9, 9);
  std::uniform_int_distribution<int> expo(0, max_degree);
  int n = nvars(rng);
  Polynomial p(std::vector<std::string>(pool.begin(), pool.begin() + n));
  int k = nterms(rng);
  for (int t = 0; t < k; ++t) {
    Polynomial::Exponents e(n, 0);
    int left = max_degree;
    for (int i = 0; i < n; ++i) {
      int x = std::min(expo(rng), left);
      e[i] = static_cast<unsigned>(x);
      left -= x;
    }
    p.add_term(e, Rat(coeff(rng)));
  }
  return p;
}

}  // namespace

TEST_CASE("parser produces the declared shapes") {
  auto e = parse_expression("1/(a^2+2)");
  REQUIRE(e->op == Op::Div);
  CHECK(is_const(e->a, Rat(1)));
  REQUIRE(e->b->op == Op::Add);
  CHECK(e->b->a->op == Op::Pow);
  CHECK(is_const(e->b->b, Rat(2)));

  e = parse_expression("6*a*b + c^2");
  REQUIRE(e->op == Op::Add);
  REQUIRE(e->a->op == Op::Mul);           // (6*a)*b, left-associated
  CHECK(e->a->a->op == Op::Mul);
  CHECK(is_const(e->a->a->a, Rat(6)));
  CHECK(e->b->op == Op::Pow);

  e = parse_expression("sqrt(x_1) + x_3^2");
  REQUIRE(e->op == Op::Add);
  CHECK(e->a->op == Op::Sqrt);
  CHECK(e->b->op == Op::Pow);
}

TEST_CASE("parser reports errors with offsets") {
  CHECK_THROWS_AS(parse_expression("a + %"), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(x)"), ParseError);
  CHECK_THROWS_AS(parse_expression("(a + b"), ParseError);
  try {
    parse_expression("ab + $");
  } catch (const ParseError& err) {
    CHECK(err.offset == 5);
  }
}

TEST_CASE("parser folds exact constants but keeps sqrt(2) symbolic") {
  CHECK(is_const(parse_expression("1/2"), Rat(1, 2)));
  CHECK(is_const(parse_expression("0.25"), Rat(1, 4)));
  CHECK(is_const(parse_expression("2^3"), Rat(8)));
  CHECK(is_const(parse_expression("(1/8)^(1/3)"), Rat(1, 2)));
  CHECK(parse_expression("sqrt(2)")->op == Op::Sqrt);
  CHECK(is_const(parse_expression("sqrt(4)"), Rat(2)));
  CHECK(parse_expression("x^2")->op == Op::Pow);
}

TEST_CASE("power is right-associative") {
  auto e = parse_expression("x^2^3");
  REQUIRE(e->op == Op::Pow);
  CHECK(e->a->op == Op::Var);
  CHECK(is_const(e->b, Rat(8)));  // 2^3 folded
}

TEST_CASE("evaluate: symmetric point, poles, and the refuted bound") {
  auto e = parse_expression("a^2 + b^2 + c^2");
  double s3 = std::sqrt(3.0) / 3.0;
  std::map<std::string, double> pt{{"a", s3}, {"b", s3}, {"c", s3}};
  auto v = evaluate(e, pt);
  REQUIRE(v.has_value());
  CHECK(std::fabs(*v - 1.0) < 1e-12);

  CHECK_FALSE(evaluate(parse_expression("1/x"), {{"x", 0.0}}).has_value());
  CHECK_FALSE(evaluate(parse_expression("log(x)"), {{"x", -1.0}}).has_value());
  CHECK_FALSE(evaluate(parse_expression("sqrt(x)"), {{"x", -1.0}}).has_value());

  // Scaling the left-hand denominators of the running example with the
  // constant-sqrt pattern overshoots at the symmetric point.
  auto lhs = parse_expression("1/(2*sqrt(2)*a) + 1/(2*sqrt(2)*b) + 1/(2*sqrt(2)*c)");
  auto rhs = parse_expression("1/(6*a*b+c^2) + 1/(6*b*c+a^2) + 1/(6*c*a+b^2)");
  auto diff = evaluate(sub(lhs, rhs), pt);
  REQUIRE(diff.has_value());
  CHECK(*diff > 0.1);
}

TEST_CASE("evaluate_exact matches float evaluation on rational-valued input") {
  auto e = parse_expression("(x+y)^3/4 - 7/3*x + 1/(y+2)");
  std::map<std::string, Rat> q{{"x", Rat(3, 7)}, {"y", Rat(-1, 2)}};
  std::map<std::string, double> d{{"x", 3.0 / 7.0}, {"y", -0.5}};
  auto ev = evaluate_exact(e, q);
  auto fv = evaluate(e, d);
  REQUIRE(ev.has_value());
  REQUIRE(fv.has_value());
  CHECK(std::fabs(rat_to_double(*ev) - *fv) < 1e-9 * std::max(1.0, std::fabs(*fv)));
}

TEST_CASE("normalize_polynomial expands exactly") {
  Polynomial p = normalize_polynomial(parse_expression("(a+b)^2"));
  CHECK(p.term_count() == 3);
  CHECK(p.terms().at({2, 0}) == 1);
  CHECK(p.terms().at({1, 1}) == 2);
  CHECK(p.terms().at({0, 2}) == 1);

  Polynomial q = normalize_polynomial(parse_expression("(x+y)^2 + (x-3/2)^2"));
  Polynomial expect = normalize_polynomial(parse_expression("2*x^2 + 2*x*y - 3*x + y^2 + 9/4"));
  CHECK(q == expect);

  CHECK_THROWS_AS(normalize_polynomial(parse_expression("1/(a^2+2)")), NotPolynomial);
  CHECK_THROWS_AS(normalize_polynomial(parse_expression("sqrt(x)+1")), NotPolynomial);
}

TEST_CASE("polynomial round-trips through expression form") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Polynomial p = random_polynomial(rng, 3, 4);
    CHECK(normalize_polynomial(p.to_expression()) == p);
  }
}

TEST_CASE("lex reduction by equality polynomials") {
  // a^2 b^2 c^2 reduces to 1 modulo abc - 1.
  Polynomial p = normalize_polynomial(parse_expression("a^2*b^2*c^2/8"));
  Polynomial h = normalize_polynomial(parse_expression("a*b*c - 1"));
  Polynomial r = p.reduce_modulo({h});
  CHECK(r.is_constant());
  CHECK(r.constant_value() == Rat(1, 8));

  Polynomial s = normalize_polynomial(parse_expression("a^2+b^2+c^2"));
  Polynomial sphere = normalize_polynomial(parse_expression("a^2+b^2+c^2-1"));
  CHECK(s.reduce_modulo({sphere}).constant_value() == 1);
}

TEST_CASE("taylor: polynomial fixpoint") {
  auto e = parse_expression("a^2 + b^2");
  Assignment center = Assignment::from_doubles({{"a", 1.0}, {"b", 1.0}});
  Polynomial t = taylor_approximate(e, center, 3);
  CHECK(t == normalize_polynomial(e));
}

TEST_CASE("taylor: 1/(x+2) at x=1, degree 1") {
  // Oracle by symbolic differentiation: f(1) = 1/3, f'(1) = -1/9,
  // so T1(x) = 1/3 - (x-1)/9 = 4/9 - x/9.
  auto e = parse_expression("1/(x+2)");
  Assignment center = Assignment::from_rationals({{"x", Rat(1)}});
  Polynomial t = taylor_approximate(e, center, 1);
  CHECK(t.terms().at({0}) == Rat(4, 9));
  CHECK(t.terms().at({1}) == Rat(-1, 9));
}

TEST_CASE("taylor: singular center rejected") {
  auto e = parse_expression("sqrt(x)");
  Assignment center = Assignment::from_doubles({{"x", 0.0}});
  CHECK_THROWS(taylor_approximate(e, center, 2));
  Assignment kink = Assignment::from_doubles({{"x", 0.0}});
  CHECK_THROWS_AS(taylor_approximate(parse_expression("abs(x)"), kink, 2), NonSmooth);
}

TEST_CASE("taylor exactness on random polynomials") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> centers(0.25, 2.0);
  for (int i = 0; i < 200; ++i) {
    Polynomial p = random_polynomial(rng, 4, 4);
    ExprPtr e = p.to_expression();
    std::map<std::string, Rat> c;
    for (const auto& v : p.vars()) c[v] = Rat(static_cast<long>(centers(rng) * 8), 8);
    Polynomial t = taylor_approximate(e, Assignment::from_rationals(c), 4);
    CHECK(t == p);
  }
}

TEST_CASE("substitute: lemma-argument instantiation shapes") {
  auto pat = parse_expression("u^2 + v^2");
  auto inst = substitute(pat, {{"u", variable("a")}, {"v", sqrt_(constant(2))}});
  CHECK(equal(canonical(inst), canonical(parse_expression("a^2 + 2"))));

  CHECK(equal(substitute(variable("x"), {}), variable("x")));

  auto prod = parse_expression("u*v");
  auto inst2 = substitute(prod, {{"u", constant(1)}, {"v", parse_expression("1/sqrt(a^2+2)")}});
  CHECK(equal(inst2, parse_expression("1/sqrt(a^2+2)")));
}

TEST_CASE("substitution composes when domains and ranges are disjoint") {
  std::mt19937_64 rng(3);
  auto e = parse_expression("u^2 + u*w + exp(w) - sqrt(u + 3)");
  std::map<std::string, ExprPtr> m1{{"u", parse_expression("x + 1")}};
  std::map<std::string, ExprPtr> m2{{"w", parse_expression("y^2")}};
  auto lhs = substitute(substitute(e, m1), m2);
  std::map<std::string, ExprPtr> composed = m1;
  for (const auto& [k, v] : m2) composed[k] = v;
  auto rhs = substitute(e, composed);
  CHECK(equal(lhs, rhs));
}

TEST_CASE("round trip: parse(print(canonical)) is identity on the corpus") {
  const char* corpus[] = {
      "1/(a^2+2)",
      "6*a*b + c^2",
      "sqrt(x_1) + x_3^2",
      "a + b + c - a^2 - b^2 - c^2",
      "(x+y)^2 + (x-3/2)^2",
      "1/(6*a*b+c^2) + 1/(6*b*c+a^2) + 1/(6*c*a+b^2)",
      "2*sqrt(1/(a^2+3*b^2+3*c^2) * 1/(b^2+3*a^2+3*c^2)) + 1/(c^2+3*a^2+3*b^2)",
      "9/(7*a^2+7*b^2+7*c^2)",
      "1/(3-2*a^2) + 1/(3-2*b^2) + 1/(3-2*c^2)",
      "(a+b+c)^3",
      "(a^5 - a^2 + 3)*(b^5 - b^2 + 3)*(c^5 - c^2 + 3)",
      "-x^2 + abs(y - 1/3)*exp(z)",
      "a^3/(b+c) - log(1 + sqrt(a*b))",
  };
  for (const char* s : corpus) {
    ExprPtr e = canonical(parse_expression(s));
    ExprPtr back = parse_expression(to_string(e));
    CHECK_MESSAGE(equal(back, e), "round trip failed for ", s, " printed as ", to_string(e));
  }
}

TEST_CASE("canonical merges commutative chains deterministically") {
  auto a = canonical(parse_expression("c^2 + 6*b*a"));
  auto b = canonical(parse_expression("6*a*b + c^2"));
  CHECK(equal(a, b));
  CHECK(to_string(a) == to_string(b));

  // Constant coefficients collapse into one leading factor.
  auto m = canonical(parse_expression("3*x*2"));
  CHECK(to_string(m) == "6*x");

  // Identical goals hash identically.
  CHECK(hash_expr(a) == hash_expr(b));
}

TEST_CASE("evaluate float/exact agreement across random rational points") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> num(-20, 20);
  auto e = parse_expression("(a*b - 3)/(a^2 + b^2 + 1) + a^3 - b/7");
  for (int i = 0; i < 100; ++i) {
    Rat qa(num(rng), 8), qb(num(rng), 8);
    std::map<std::string, Rat> q{{"a", qa}, {"b", qb}};
    std::map<std::string, double> d{{"a", rat_to_double(qa)}, {"b", rat_to_double(qb)}};
    auto ev = evaluate_exact(e, q);
    auto fv = evaluate(e, d);
    REQUIRE(ev.has_value());
    REQUIRE(fv.has_value());
    CHECK(std::fabs(rat_to_double(*ev) - *fv) <= 1e-9 * std::max(1.0, std::fabs(*fv)));
  }
}
