#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace ineq {

using Rat = mpq_class;

// "3", "-3/4", "0.25", "1e3" -> exact rational. Decimal strings never lose
// precision; there is no floating intermediate.
std::optional<Rat> rat_from_string(const std::string& text);

// Prints as "p" or "p/q" in lowest terms.
std::string rat_to_string(const Rat& q);

double rat_to_double(const Rat& q);

// q^e for integer e; e < 0 requires q != 0.
std::optional<Rat> rat_pow_int(const Rat& q, long e);

// Exact k-th root when one exists (k >= 1). Negative bases allowed for odd k.
std::optional<Rat> rat_root(const Rat& q, unsigned long k);

bool rat_is_integer(const Rat& q);

// Value of q as long when it is an integer fitting in long.
std::optional<long> rat_to_long(const Rat& q);

}  // namespace ineq
