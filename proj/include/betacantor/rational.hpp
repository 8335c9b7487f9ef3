#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>

namespace betacantor {

using Integer = mpz_class;
using Rational = mpq_class;

// num/den in canonical form. The two-argument gmpxx constructor does not
// reduce, and unreduced values break equality.
Rational make_rational(const Integer& num, const Integer& den);

// Exact value of a finite double.
Rational rational_from_double(double v);

double to_double(const Rational& q);
double to_double(const Integer& z);

Integer floor_of(const Rational& q);
Integer ceil_of(const Rational& q);

// 2^e for any integer e.
Rational pow2(long e);

std::optional<Rational> exact_sqrt(const Rational& q);

// Accepts "a", "a/b", decimals such as "-0.125" and "1e-3".
Rational parse_rational(std::string_view text);

// "num/den", or "num" when the denominator is one.
std::string format_rational(const Rational& q);

// Number of bits in numerator plus denominator, a size measure.
std::size_t bit_size(const Rational& q);

// log2 of a positive rational, accurate far below the double range.
double log2_of(const Rational& q);

}  // namespace betacantor
