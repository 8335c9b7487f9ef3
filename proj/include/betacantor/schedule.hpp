#pragma once

#include <string>
#include <vector>

#include "betacantor/rational.hpp"

namespace betacantor {

enum class Flavor { thm11, thm12, custom };

std::string to_string(Flavor f);
Flavor parse_flavor(const std::string& name);

// Parameters (a_k, h_k, n_k) for k = 1..k_max. Vectors are 0-based, so a[k-1]
// is a_k.
struct Schedule {
  Flavor flavor = Flavor::custom;
  bool exact_a = true;  // false when a_k are rational approximations
  bool tame = false;    // fast test schedule, n_k far below 1/h_k^2
  std::vector<Rational> a;
  std::vector<Rational> h;
  std::vector<Integer> n;

  int k_max() const { return static_cast<int>(a.size()); }
  const Rational& a_at(int k) const;
  const Rational& h_at(int k) const;
  const Integer& n_at(int k) const;
  double a_d(int k) const { return to_double(a_at(k)); }
  double h_d(int k) const { return to_double(h_at(k)); }
};

struct ScheduleCheck {
  bool separation = true;  // h_{k+1} <= 2^(-2k-5) min(h_k, min length at k)
  bool n_rule = true;      // n_k is the smallest integer above 1/h_k^2
  bool monotone = true;    // a_k and h_k strictly decreasing
  bool nested_heights = true;  // h_k exceeds the sum of all later h
  std::vector<std::string> failures;

  bool faithful() const { return separation && n_rule && monotone && nested_heights; }
};

ScheduleCheck check_schedule(const Schedule& s);

// Length of the shortest generation-k segment.
Rational min_segment_length(const Schedule& s, int k);

// Sum of h_l for l > k up to k_max: the height span of descendants of a
// generation-k segment.
Rational descendant_height(const Schedule& s, int k);

// Budget on exact magnitudes: every h_k and segment length must stay in the
// normal double range so that rescaled windows can be formed.
struct ScheduleBudget {
  double min_log2 = -1000.0;
};

Schedule schedule_thm11(int k_max, ScheduleBudget budget = {});
Schedule schedule_thm12(int k_max, ScheduleBudget budget = {});
// h_k = 8^-k, n_k = 8^k, a_k = 1/(2k).
Schedule schedule_tame(int k_max);
Schedule schedule_custom(std::vector<Rational> a, std::vector<Rational> h, std::vector<Integer> n);

// 1/(j log^2(e + j)) to within 1e-12, as an exact dyadic rational.
Rational thm12_coefficient(int j);

}  // namespace betacantor
