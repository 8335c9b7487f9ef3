#pragma once

#include <optional>
#include <string>
#include <vector>

#include "betacantor/construction.hpp"
#include "betacantor/measure.hpp"

namespace betacantor {

// Segments become equal-mass atoms at the midpoints of equal parts, with
// spacing below `spacing`.
AtomicMeasure atomize(const SegmentMeasure& mu, double spacing, std::size_t budget = 4'000'000);

// See ConstructionMeasure::coarse_atoms.
AtomicMeasure atomize(const ConstructionMeasure& mu, double spacing, std::size_t budget = 4'000'000);

struct LatticeOptions {
  double a0 = 50.0;
  double c0 = 10.0;
  int depth = 3;  // levels 0..depth

  void validate() const;
};

struct LatticeCube {
  int level = 0;
  std::size_t center_atom = 0;
  Point center;
  double radius = 0.0;                // r(Q)
  std::vector<std::size_t> members;  // atom indices, ascending
  double mass = 0.0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
};

// Cubes over the atoms of a measure. Lengths are measured in the unit u
// fixed by the root: the root is the whole support, centered at the atom
// nearest the middle of its bounding box, with radius the largest distance
// from there over 28 (so the support lies in 28B(root)). Level k has r(Q) = u A0^-k,
// so A0^-k <= r(Q)/u <= C0 A0^-k holds with the lower bound attained.
struct Lattice {
  LatticeOptions options;
  double unit = 0.0;
  std::vector<LatticeCube> cubes;                  // cubes[0] is the root
  std::vector<std::vector<std::size_t>> levels;   // cube ids per level

  double level_radius(int k) const;
  double side_length(int k) const;  // 56 C0 A0^-k, in absolute units
};

// Level k >= 1: a greedy net of atoms with pairwise distance > 10 r_k, by
// decreasing mass then lexicographic position. The finest level takes each
// atom to its nearest center; coarser levels take each child cube whole to
// the center nearest the child's center, so cubes nest by construction.
// The invariants are checked before returning.
Lattice build_lattice(const AtomicMeasure& mu, const LatticeOptions& options);

struct LatticeCheck {
  bool partition = true;
  bool nesting = true;
  bool containment = true;  // E cap B(Q) within Q within 28B(Q)
  bool disjoint = true;     // 5B(Q) pairwise disjoint within a level
  std::vector<std::string> failures;

  bool ok() const { return partition && nesting && containment && disjoint; }
};

LatticeCheck check_lattice(const Lattice& lattice, const AtomicMeasure& mu);

}  // namespace betacantor
