#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "betacantor/beta.hpp"
#include "betacantor/construction.hpp"
#include "betacantor/measure.hpp"

namespace betacantor {

struct DensitySample {
  double r = 0.0;
  double ratio = 0.0;  // mu(B(x, r)) / (2r)
};

// Radii strictly decreasing, as produced by ScaleGrid::radii.
struct DensityProfile {
  Point x;
  std::vector<DensitySample> samples;

  double lower() const;  // min ratio over the grid
  double upper() const;  // max ratio over the grid
};

DensityProfile density_profile(const Measure& mu, const RationalPoint& x, const ScaleGrid& grid);

struct WitnessRow {
  int k = 0;
  double h = 0.0;
  double a = 0.0;
  double r = 0.0;      // h_k / 2
  double ratio = 0.0;  // mu_j(B(x, r)) / (2r)
};

// Density ratios at r = h_k/2 for k_lo <= k <= k_hi, measured with mu_j.
// Every probed k must see x on an up child (x in U_k).
std::vector<WitnessRow> unrectifiability_witness(const Measure& mu_j, const Schedule& s, const PointAddress& x,
                                                 int k_lo, int k_hi);

void write_witness_csv(std::ostream& out, const std::vector<WitnessRow>& rows);

// The two conditions on a ball B = B(x, r) in the plane with n = 1:
//   mu(Lambda B) <= 2 Lambda^2 mu(B)   and   mu(B) <= 10 C_* Lambda r.
struct DoublingTest {
  double mass = 0.0;
  double dilated_mass = 0.0;
  bool doubling = false;
  bool density = false;
  bool passes() const { return doubling && density; }
};

DoublingTest doubling_test(const Measure& mu, Point x, double r, double big_lambda, double c_star);

// Grid radii at which both conditions hold.
std::vector<double> doubling_scales(const Measure& mu, const RationalPoint& x, double big_lambda, double c_star,
                                    const ScaleGrid& grid);

struct Descent {
  double s = 0.0;
  double r = 0.0;
  int steps = 0;  // r = Lambda^-steps s
};

// From s with mu(B(x, s))/s <= 2 C_*, the least j with
// mu(B(x, Lambda^-j s)) / (Lambda^-j s) >= 3 C_*. Then r = Lambda^-j s has
// mu(B(x, Lambda r)) <= Lambda mu(B(x, r)) and mu(B(x, r)) <= 3 C_* Lambda r.
// Empty when no j <= max_steps reaches the threshold.
std::optional<Descent> doubling_descent(const Measure& mu, Point x, double s, double big_lambda, double c_star,
                                        int max_steps = 64);

// 0.9-quantile over the points of the smallest grid value of mu(B(x, r))/r.
double estimate_c_star(const Measure& mu, const std::vector<Point>& points, const ScaleGrid& grid,
                       double quantile = 0.9);

struct MuTildeOptions {
  double big_lambda = 100.0;
  double rho = 0.0;       // largest admissible radius
  double epsilon = 0.25;  // allowed uncovered mass fraction
  double c_star = 1.0;
  double lambda = 0.8408964152537145;  // radius grid ratio below rho
  int max_rounds = 64;
  std::size_t max_balls = 1'000'000;

  void validate() const;
};

struct SelectedBall {
  Point center;
  double radius = 0.0;
  double mass = 0.0;          // mu(B_i)
  double dilated_mass = 0.0;  // mu(Lambda B_i)
};

// The approximating measure: D_i is the horizontal segment of length r(B_i)
// centered at the center of B_i, with density mu(B_i)/r(B_i). Its rational
// mass equals the double mu(B_i) exactly.
struct MuTilde {
  std::vector<SelectedBall> balls;
  SegmentMeasure measure;
  std::vector<bool> covered;  // per atom of the input
  double total_mass = 0.0;
  double covered_mass = 0.0;
  int rounds = 0;
};

// Greedy rounds of Vitali-type selection centered at atoms. In each round
// every uncovered atom proposes the largest grid radius <= rho that passes
// both conditions and is disjoint from the balls already chosen; proposals
// are taken by decreasing mass, ties by center, while disjoint. Stops once
// the uncovered mass is at most epsilon of the total.
MuTilde build_mu_tilde(const AtomicMeasure& mu, const MuTildeOptions& options);

// max over radii of mu(B(x, r))/r.
double maximal_function(const Measure& mu, Point x, const std::vector<double>& radii);

struct MaximalComparison {
  double lhs = 0.0;  // integral over covered atoms of M_rho(restricted mu)
  double rhs = 0.0;  // integral of M_rho(mu tilde) against mu tilde
  double ratio = 0.0;
  std::size_t points = 0;
};

// Both sides of the restricted maximal comparison with radii from `radii`
// (all >= rho). At most max_points atoms and max_points disk nodes are
// used, by deterministic stride, with masses reweighted.
MaximalComparison compare_maximal(const AtomicMeasure& mu, const MuTilde& tilde, const std::vector<double>& radii,
                                  int nodes_per_disk = 4, std::size_t max_points = 4000);

struct TransferRow {
  Point x;
  double tilde_square = 0.0;  // sum of beta_{mu tilde,2}(x, r)^2 over the grid
  double mu_square = 0.0;     // sum of beta_{mu,2}(x, 20r)^2 over the grid
  double correction = 0.0;    // sum over r of sum_j 4 r_j^2 mu(B_j) / r^3, B_j meeting B(x, 20r)
  double ratio = 0.0;         // tilde_square / (mu_square + correction), 0 when both vanish
};

// Disk centers are used as sample points, by deterministic stride.
std::vector<TransferRow> beta_transfer(const Measure& mu, const MuTilde& tilde, const ScaleGrid& grid,
                                       std::size_t samples, unsigned threads = 0);

}  // namespace betacantor
