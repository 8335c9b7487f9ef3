#include "betacantor/schedule.hpp"

#include <cmath>
#include <numbers>

#include "betacantor/error.hpp"

namespace betacantor {

std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::thm11: return "thm11";
    case Flavor::thm12: return "thm12";
    case Flavor::custom: return "custom";
  }
  return "custom";
}

Flavor parse_flavor(const std::string& name) {
  if (name == "thm11") return Flavor::thm11;
  if (name == "thm12") return Flavor::thm12;
  if (name == "custom" || name == "tame") return Flavor::custom;
  throw InvalidArgument("unknown flavor '" + name + "'");
}

namespace {

void check_level(const Schedule& s, int k) {
  if (k < 1 || k > s.k_max())
    throw ResourceExhausted("schedule has no generation " + std::to_string(k) + " (k_max = " +
                            std::to_string(s.k_max()) + ")");
}

}  // namespace

const Rational& Schedule::a_at(int k) const {
  check_level(*this, k);
  return a[k - 1];
}

const Rational& Schedule::h_at(int k) const {
  check_level(*this, k);
  return h[k - 1];
}

const Integer& Schedule::n_at(int k) const {
  check_level(*this, k);
  return n[k - 1];
}

Rational min_segment_length(const Schedule& s, int k) {
  Rational len = 1;
  for (int l = 1; l <= k; ++l) {
    const Rational& a = s.a_at(l);
    Rational frac = a < Rational(1, 2) ? a : Rational(1 - a);
    len *= frac / Rational(s.n_at(l));
  }
  return len;
}

Rational descendant_height(const Schedule& s, int k) {
  Rational total = 0;
  for (int l = k + 1; l <= s.k_max(); ++l) total += s.h[l - 1];
  return total;
}

ScheduleCheck check_schedule(const Schedule& s) {
  ScheduleCheck c;
  Rational len = 1;
  for (int k = 0; k < s.k_max(); ++k) {
    // Generation 0 is the unit segment; its height parameter is taken as 1.
    Rational prev_h = k == 0 ? Rational(1) : s.h[k - 1];
    Rational bound = pow2(-2L * k - 5) * (prev_h < len ? prev_h : len);
    if (s.h[k] > bound) {
      c.separation = false;
      c.failures.push_back("h_" + std::to_string(k + 1) + " exceeds 2^(-2k-5) min(h_k, min length)");
    }
    const Rational& a = s.a[k];
    len *= (a < Rational(1, 2) ? a : Rational(1 - a)) / Rational(s.n[k]);
  }
  for (int k = 1; k <= s.k_max(); ++k) {
    Integer want = floor_of(1 / (s.h_at(k) * s.h_at(k))) + 1;
    if (s.n_at(k) != want) {
      c.n_rule = false;
      c.failures.push_back("n_" + std::to_string(k) + " is not the smallest integer above 1/h^2");
    }
    if (k > 1 && !(s.a_at(k) < s.a_at(k - 1) && s.h_at(k) < s.h_at(k - 1))) {
      c.monotone = false;
      c.failures.push_back("a or h not strictly decreasing at k = " + std::to_string(k));
    }
    if (s.h_at(k) <= descendant_height(s, k)) {
      c.nested_heights = false;
      c.failures.push_back("h_" + std::to_string(k) + " does not dominate the later heights");
    }
  }
  return c;
}

namespace {

template <class Coefficient>
Schedule build_faithful(Flavor flavor, int k_max, ScheduleBudget budget, Coefficient coef) {
  require(k_max >= 1, "k_max must be at least 1");
  Schedule s;
  s.flavor = flavor;
  s.exact_a = flavor != Flavor::thm12;
  Rational h = pow2(-7);
  Rational len = 1;
  for (int k = 1; k <= k_max; ++k) {
    if (log2_of(h) < budget.min_log2)
      throw ResourceExhausted("generation " + std::to_string(k) + " of the " + to_string(flavor) +
                              " schedule is beyond the magnitude budget");
    Rational a = coef(k);
    Integer n = floor_of(1 / (h * h)) + 1;
    s.a.push_back(a);
    s.h.push_back(h);
    s.n.push_back(n);
    len *= (a < Rational(1, 2) ? a : Rational(1 - a)) / Rational(n);
    if (log2_of(len) < budget.min_log2)
      throw ResourceExhausted("segment lengths of generation " + std::to_string(k) +
                              " are beyond the magnitude budget");
    h = pow2(-2L * k - 5) * (h < len ? h : len);
  }
  return s;
}

}  // namespace

Rational thm12_coefficient(int j) {
  require(j >= 1, "coefficient index must be positive");
  long double l = std::log(std::numbers::e_v<long double> + static_cast<long double>(j));
  long double v = 1.0L / (static_cast<long double>(j) * l * l);
  return rational_from_double(static_cast<double>(v));
}

Schedule schedule_thm11(int k_max, ScheduleBudget budget) {
  return build_faithful(Flavor::thm11, k_max, budget, [](int k) { return Rational(1, 2 * k); });
}

Schedule schedule_thm12(int k_max, ScheduleBudget budget) {
  return build_faithful(Flavor::thm12, k_max, budget, thm12_coefficient);
}

Schedule schedule_tame(int k_max) {
  require(k_max >= 1, "k_max must be at least 1");
  Schedule s;
  s.flavor = Flavor::custom;
  s.tame = true;
  for (int k = 1; k <= k_max; ++k) {
    Integer p;
    mpz_ui_pow_ui(p.get_mpz_t(), 8, static_cast<unsigned long>(k));
    s.a.push_back(Rational(1, 2 * k));
    Rational h(Integer(1), p);
    s.h.push_back(h);
    s.n.push_back(p);
  }
  return s;
}

Schedule schedule_custom(std::vector<Rational> a, std::vector<Rational> h, std::vector<Integer> n) {
  require(!a.empty(), "custom schedule needs at least one generation");
  require(a.size() == h.size() && a.size() == n.size(), "custom schedule lists must have equal length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i].canonicalize();
    h[i].canonicalize();
    require(sgn(a[i]) > 0 && a[i] < 1, "a_k must lie in (0, 1)");
    require(sgn(h[i]) > 0 && h[i] < 1, "h_k must lie in (0, 1)");
    require(n[i] >= 2, "n_k must be at least 2");
  }
  Schedule s;
  s.flavor = Flavor::custom;
  s.a = std::move(a);
  s.h = std::move(h);
  s.n = std::move(n);
  return s;
}

}  // namespace betacantor
