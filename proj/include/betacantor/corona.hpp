#pragma once

#include <iosfwd>
#include <vector>

#include "betacantor/beta.hpp"
#include "betacantor/lattice.hpp"

namespace betacantor {

// Theta(2B_Q) = mu(B(z_Q, 56 r(Q))) / (56 r(Q)), since B_Q = 28B(Q).
double theta_2b(const AtomicMeasure& mu, const LatticeCube& q);

struct CoronaTree {
  double c_thr = 2.0;
  std::vector<std::size_t> roots;               // cube ids; roots[0] is the lattice root
  std::vector<std::size_t> tree_of;             // per cube: index into roots
  std::vector<double> theta;                    // per cube: Theta(2B_Q)
  std::vector<std::vector<std::size_t>> trees;  // per root: its cubes, root first

  double root_theta(std::size_t t) const { return theta[roots[t]]; }
};

// Depth-first from the lattice root: a child cube starts a new tree when
// Theta(2B_Q) > c_thr Theta(2B_R) for the root R of its parent's tree, and
// otherwise joins that tree. Every cube lands in exactly one tree.
CoronaTree corona_decompose(const Lattice& lattice, const AtomicMeasure& mu, double c_thr);

struct CoronaCheck {
  bool disjoint_union = true;  // each cube in exactly one tree
  bool root_in_top = true;
  double density_control = 0.0;  // max over trees of max Theta(2B_Q) / Theta(2B_R)
  double root_mass_ratio = 0.0;  // max over roots of mu(2B_R) / mu(R)
  std::size_t deepest_level = 0;
  double deepest_density_gap = 0.0;  // max over trees of Theta(2B_R)/Theta(2B_Q) at their finest cubes
  bool ok() const { return disjoint_union && root_in_top; }
};

CoronaCheck check_corona(const CoronaTree& tree, const Lattice& lattice, const AtomicMeasure& mu);

struct PackingOptions {
  ScaleGrid grid;               // radii for the beta square function
  std::size_t max_points = 256;  // atoms used for the beta term, by stride
  unsigned threads = 0;
};

struct PackingReport {
  double lhs = 0.0;        // sum over roots of Theta(2B_R) mu(R)
  double c_star = 0.0;     // max Theta(2B_Q) over cubes below the root
  double rhs_mass = 0.0;   // c_star mu(E)
  double rhs_beta = 0.0;   // mass-weighted sum of square functions at p = 2
  double ratio = 0.0;      // lhs / (rhs_mass + rhs_beta)
  std::size_t roots = 0;
  std::size_t beta_points = 0;
};

PackingReport packing_report(const CoronaTree& tree, const Lattice& lattice, const AtomicMeasure& mu,
                             const PackingOptions& options);

// Default grid for packing: from the finest lattice radius up to the root's 28B.
ScaleGrid packing_grid(const Lattice& lattice, double lambda);

struct MaximalBound {
  std::vector<double> bound;  // per atom: c_thr max Theta(2B_R) over the roots of its cubes
  std::vector<double> direct;  // per atom: max of mu(B(x, r))/r over the radii
  double constant = 0.0;       // max direct / bound
};

// Direct values use radii from 28 r at the finest level up to twice the
// root's 28B radius, where every ball sits inside 2B_Q of a cube holding x.
MaximalBound maximal_via_corona(const CoronaTree& tree, const Lattice& lattice, const AtomicMeasure& mu,
                                double lambda = 0.8408964152537145);

// Roots with level, mass and Theta, tree sizes, and the check results.
void write_corona_json(std::ostream& out, const CoronaTree& tree, const Lattice& lattice, const CoronaCheck& check);

void write_packing_csv_header(std::ostream& out);
void write_packing_csv_row(std::ostream& out, double lambda, const PackingReport& r);

}  // namespace betacantor
