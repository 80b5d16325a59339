#include "ineq/rational.hpp"

#include <cctype>
#include <cstdlib>

namespace ineq {

std::optional<Rat> rat_from_string(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::string s = text;
  bool negative = false;
  size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  std::string digits, frac, exp;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++];
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) frac += s[i++];
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) exp += s[i++];
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) exp += s[i++];
    if (exp.empty() || exp == "+" || exp == "-") return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  if (digits.empty() && frac.empty()) return std::nullopt;

  mpz_class num(digits.empty() ? "0" : digits);
  mpz_class den(1);
  for (char c : frac) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  Rat q(num, den);
  q.canonicalize();
  if (!exp.empty()) {
    long e = std::strtol(exp.c_str(), nullptr, 10);
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
    Rat scale(pow10);
    q = e < 0 ? Rat(q / scale) : Rat(q * scale);
  }
  if (negative) q = -q;
  q.canonicalize();
  return q;
}

std::string rat_to_string(const Rat& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

double rat_to_double(const Rat& q) { return q.get_d(); }

std::optional<Rat> rat_pow_int(const Rat& q, long e) {
  if (e == 0) return Rat(1);
  if (q == 0 && e < 0) return std::nullopt;
  mpz_class num, den;
  unsigned long k = static_cast<unsigned long>(e < 0 ? -e : e);
  mpz_pow_ui(num.get_mpz_t(), q.get_num().get_mpz_t(), k);
  mpz_pow_ui(den.get_mpz_t(), q.get_den().get_mpz_t(), k);
  Rat r = e < 0 ? Rat(den, num) : Rat(num, den);
  r.canonicalize();
  return r;
}

std::optional<Rat> rat_root(const Rat& q, unsigned long k) {
  if (k == 0) return std::nullopt;
  if (k == 1) return q;
  if (q < 0 && k % 2 == 0) return std::nullopt;
  mpz_class num, den;
  int exact_num = mpz_root(num.get_mpz_t(), q.get_num().get_mpz_t(), k);
  int exact_den = mpz_root(den.get_mpz_t(), q.get_den().get_mpz_t(), k);
  if (!exact_num || !exact_den) return std::nullopt;
  Rat r(num, den);
  r.canonicalize();
  return r;
}

bool rat_is_integer(const Rat& q) { return q.get_den() == 1; }

std::optional<long> rat_to_long(const Rat& q) {
  if (q.get_den() != 1) return std::nullopt;
  if (!q.get_num().fits_slong_p()) return std::nullopt;
  return q.get_num().get_si();
}

}  // namespace ineq
