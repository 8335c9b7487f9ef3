#include "betacantor/rational.hpp"

#include <cctype>
#include <cmath>

#include "betacantor/error.hpp"

namespace betacantor {

Rational make_rational(const Integer& num, const Integer& den) {
  require(den != 0, "zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational rational_from_double(double v) {
  require(std::isfinite(v), "cannot convert a non-finite double to a rational");
  Rational q;
  mpq_set_d(q.get_mpq_t(), v);
  return q;
}

double to_double(const Rational& q) { return mpq_get_d(q.get_mpq_t()); }

double to_double(const Integer& z) { return mpz_get_d(z.get_mpz_t()); }

Integer floor_of(const Rational& q) {
  Integer r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

Integer ceil_of(const Rational& q) {
  Integer r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

Rational pow2(long e) {
  Integer p;
  mpz_ui_pow_ui(p.get_mpz_t(), 2, static_cast<unsigned long>(e < 0 ? -e : e));
  if (e >= 0) return Rational(p);
  Rational q(Integer(1), p);
  q.canonicalize();
  return q;
}

std::optional<Rational> exact_sqrt(const Rational& q) {
  if (sgn(q) < 0) return std::nullopt;
  if (!mpz_perfect_square_p(q.get_num_mpz_t()) ||
      !mpz_perfect_square_p(q.get_den_mpz_t()))
    return std::nullopt;
  Integer n, d;
  mpz_sqrt(n.get_mpz_t(), q.get_num_mpz_t());
  mpz_sqrt(d.get_mpz_t(), q.get_den_mpz_t());
  Rational r(n, d);
  r.canonicalize();
  return r;
}

namespace {

Integer parse_integer(std::string_view s, std::string_view whole) {
  require(!s.empty(), "malformed number '" + std::string(whole) + "'");
  for (char c : s)
    require(std::isdigit(static_cast<unsigned char>(c)),
            "malformed number '" + std::string(whole) + "'");
  // Base 10 explicitly: base 0 reads a leading zero as octal.
  return Integer(std::string(s), 10);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  require(!s.empty(), "empty number");
  bool negative = false;
  if (s.front() == '-' || s.front() == '+') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    Integer num = parse_integer(s.substr(0, slash), text);
    Integer den = parse_integer(s.substr(slash + 1), text);
    require(den != 0, "zero denominator in '" + std::string(text) + "'");
    value = Rational(num, den);
    value.canonicalize();
  } else {
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      std::string_view ex = s.substr(e + 1);
      bool eneg = false;
      if (!ex.empty() && (ex.front() == '-' || ex.front() == '+')) {
        eneg = ex.front() == '-';
        ex.remove_prefix(1);
      }
      Integer ez = parse_integer(ex, text);
      require(ez < 100000, "exponent too large in '" + std::string(text) + "'");
      exponent = ez.get_si() * (eneg ? -1 : 1);
      s = s.substr(0, e);
    }
    std::string digits;
    long scale = 0;
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
      digits = std::string(s.substr(0, dot)) + std::string(s.substr(dot + 1));
      scale = static_cast<long>(s.size() - dot - 1);
    } else {
      digits = std::string(s);
    }
    value = Rational(parse_integer(digits, text));
    long shift = exponent - scale;
    Integer ten;
    mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    if (shift >= 0) value *= ten;
    else value /= ten;
    value.canonicalize();
  }
  return negative ? Rational(-value) : value;
}

std::string format_rational(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::size_t bit_size(const Rational& q) {
  return mpz_sizeinbase(q.get_num_mpz_t(), 2) + mpz_sizeinbase(q.get_den_mpz_t(), 2);
}

double log2_of(const Rational& q) {
  require(sgn(q) > 0, "log2 of a non-positive rational");
  long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, q.get_num_mpz_t());
  double md = mpz_get_d_2exp(&ed, q.get_den_mpz_t());
  return std::log2(mn) - std::log2(md) + static_cast<double>(en - ed);
}

}  // namespace betacantor
