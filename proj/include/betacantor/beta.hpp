#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "betacantor/measure.hpp"
#include "betacantor/schedule.hpp"

namespace betacantor {

enum class BetaVariant { beta, beta_tilde };

std::string to_string(BetaVariant v);
BetaVariant parse_variant(const std::string& name);

// A line in window coordinates, kept as an explicit unit normal so that
// nearly horizontal lines keep full precision.
struct LineFit {
  Point normal{0.0, 1.0};
  double c = 0.0;
  double objective = 0.0;  // sum of dist^p against the normalized window
  std::size_t evaluations = 0;
};

// Integral of dist(u, L)^p over the normalized window.
double window_objective(const Window& w, Point normal, double c, double p);

// Exact L2 minimizer: through the centroid, normal along the eigenvector of
// the smallest eigenvalue of the scatter matrix. Requires positive mass.
LineFit fit_line_p2(const Window& w);

// General p >= 1: 180-point angle grid, golden-section refinement of the
// three best brackets and of the L2 line's angle, exact or convex inner
// minimization over the offset.
LineFit fit_line_search(const Window& w, double p);

// Best offset for a fixed normal, and the objective there.
std::pair<double, double> best_offset(const Window& w, Point normal, double p);

struct BetaResult {
  double value = 0.0;
  Line best_line;
  BetaVariant variant = BetaVariant::beta;
  double p = 2.0;
  double ball_mass = 0.0;
  std::size_t pieces = 0;
  std::size_t touched = 0;
  std::size_t iterations = 0;
};

// Both variants share the minimizing line; beta_tilde is NaN on empty balls.
struct BetaPair {
  double beta = 0.0;
  double beta_tilde = 0.0;
  Line best_line;
  double ball_mass = 0.0;
  std::size_t pieces = 0;
  std::size_t touched = 0;
  std::size_t iterations = 0;
};

BetaPair beta_pair(const Measure& mu, const Ball& ball, double p);
BetaResult beta(const Measure& mu, const RationalPoint& x, const Rational& r, double p, BetaVariant variant);
BetaResult beta(const Measure& mu, const Ball& ball, double p, BetaVariant variant);

// Best lines in the original coordinates.
Line best_line_p2(const Measure& mu, const Ball& ball);
Line best_line_search(const Measure& mu, const Ball& ball, double p);

// Radii r_m = r_max lambda^m, m = 0, 1, ..., down to r_min.
struct ScaleGrid {
  double r_min = 0.0;
  double r_max = 1.0;
  double lambda = 0.8408964152537145;  // 2^(-1/4)

  void validate() const;
  std::vector<double> radii() const;
  double weight() const;  // ln(1/lambda), the dr/r measure of one grid cell
};

struct ScaleSample {
  double r = 0.0;
  BetaPair value;
};

// beta_pair at each radius, evaluated in parallel, in input order.
std::vector<ScaleSample> scale_samples(const Measure& mu, const RationalPoint& x, const std::vector<double>& radii,
                                       double p, unsigned threads = 0);

struct SquareFunction {
  double value = 0.0;
  std::size_t scales = 0;
  std::size_t empty_scales = 0;  // beta_tilde terms skipped on empty balls
};

// Sum over grid radii of beta^2 ln(1/lambda).
SquareFunction square_function(const Measure& mu, const RationalPoint& x, double p, const ScaleGrid& grid,
                               BetaVariant variant, unsigned threads = 0);
SquareFunction square_function(const std::vector<ScaleSample>& samples, double weight, BetaVariant variant);

// min over `samples` radii in [2h_k, 4h_k] of beta(mu, x, r, p).
double beta_lower_bound_probe(const Measure& mu_j, const RationalPoint& x, int k, double p, const Schedule& s,
                              int samples = 9);

struct BetaRow {
  Point x;
  double r = 0.0;
  double p = 2.0;
  BetaVariant variant = BetaVariant::beta;
  double value = 0.0;
  Line line;
  double ball_mass = 0.0;
};

void write_beta_csv_header(std::ostream& out);
void write_beta_csv_row(std::ostream& out, const BetaRow& row);

}  // namespace betacantor
