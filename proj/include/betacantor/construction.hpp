#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "betacantor/measure.hpp"
#include "betacantor/schedule.hpp"

namespace betacantor {

enum class Branch : std::uint8_t { down = 0, up = 1 };

struct AddressStep {
  Integer child;  // 0-based index within its family
  Branch branch = Branch::down;

  bool operator==(const AddressStep&) const = default;
};

// Path from E_0 to one generation-k segment.
struct SegmentAddress {
  std::vector<AddressStep> path;

  int depth() const { return static_cast<int>(path.size()); }
  bool operator==(const SegmentAddress&) const = default;
};

// A point on a generation-k segment: its address and the exact offset from
// the segment's left end.
struct PointAddress {
  SegmentAddress segment;
  Rational offset;
};

struct SegmentGeometry {
  Rational x0;
  Rational length;
  Rational y;
  int generation = 0;

  WeightedSegment to_segment() const;
};

// n equal closed segments on I + h e2 of total length a|I|; the first is
// left-aligned with I and the last right-aligned.
std::vector<WeightedSegment> children(const WeightedSegment& parent, const Rational& h, const Rational& a,
                                      const Integer& n);

// E_{k+1} from E_k. Throws when the result would exceed the segment budget or
// when two segments overlap.
std::vector<WeightedSegment> refine(const std::vector<WeightedSegment>& parent, int k, const Schedule& s,
                                    std::size_t budget = 4'000'000);

// E_k by full enumeration.
SegmentMeasure enumerate_generation(const Schedule& s, int k, std::size_t budget = 4'000'000);

// Throws InvariantViolation if two segments of the list intersect.
void check_disjoint(const std::vector<WeightedSegment>& segments);

SegmentGeometry segment_geometry(const Schedule& s, const SegmentAddress& address);
RationalPoint point_of(const Schedule& s, const PointAddress& x);

struct AddressedSegment {
  SegmentAddress address;
  SegmentGeometry geometry;
};

// Generation-k segments meeting the closed window, found by descending only
// through ancestors whose hulls meet it.
std::vector<AddressedSegment> window_segments(const Ball& window, int k, const Schedule& s,
                                              std::size_t budget = 4'000'000);
SegmentMeasure window_refine(const Ball& window, int k, const Schedule& s,
                             std::size_t budget = 4'000'000);

// The piecewise translation from supp mu_k to supp mu_{k+1}. The k-th
// generation segment is cut into n_{k+1} pieces; the closed left part of
// piece i goes to down-child i and the half-open right part to up-child i.
// A piece boundary shared by two pieces belongs to the later piece.
PointAddress transport(const Schedule& s, const PointAddress& x);

// The set of offsets on the parent segment that transport maps onto the
// given child, an interval from t0 to t1 with the stated closedness.
struct TransportPreimage {
  SegmentAddress parent;
  Rational t0;
  Rational t1;
  bool left_closed = true;
  bool right_closed = true;

  bool contains(const Rational& t) const {
    return (left_closed ? t >= t0 : t > t0) && (right_closed ? t <= t1 : t < t1);
  }
};
TransportPreimage transport_preimage(const Schedule& s, const SegmentAddress& child);

// Address of a point of E_k, if it lies on E_k.
std::optional<PointAddress> locate(const Schedule& s, const RationalPoint& p, int k);

enum class Side { down, up };

// U_k (up) or D_k (down) from the branch taken at generation k.
Side classify(const PointAddress& x, int k);

// A point distributed according to mu_depth: at each level the up family is
// chosen with probability a_l and the child index uniformly.
PointAddress sample_point(const Schedule& s, int depth, std::mt19937_64& rng);

// As sample_point, with the branch at generation k forced.
PointAddress sample_point_with_branch(const Schedule& s, int depth, int k, Branch branch,
                                      std::mt19937_64& rng);

// As sample_point, with the branch forced at every generation in [k_lo, k_hi].
PointAddress sample_point_with_branches(const Schedule& s, int depth, int k_lo, int k_hi, Branch branch,
                                        std::mt19937_64& rng);

// Point on supp mu_{k} nearest to a point of supp mu_{k+1}: the point itself,
// or its shift down by h_{k+1} on the parent segment.
PointAddress nearest_parent_point(const Schedule& s, const PointAddress& x);

struct GenerationStats {
  Integer count;
  Rational total_mass;
  Rational min_length;
  Rational max_length;
};

// Exact per-generation totals via the 2^k length classes.
GenerationStats generation_stats(const Schedule& s, int k);

// Square of max over segments J of dist(J, rest), exact, for an enumerated set.
Rational separation_squared(const std::vector<WeightedSegment>& segments);

struct ConstructionOptions {
  // Runs of children spaced closer than this fraction of the radius and lying
  // wholly inside the ball at a given height are merged into one uniform
  // piece of the same mass. Zero disables merging.
  double merge_tolerance = 1e-2;
  std::size_t budget = 4'000'000;  // pieces plus visited nodes per window
};

// mu_k evaluated lazily, window by window, without enumerating E_k.
class ConstructionMeasure : public Measure {
 public:
  ConstructionMeasure(Schedule s, int generation, ConstructionOptions options = {});

  const Schedule& schedule() const { return schedule_; }
  int generation() const { return generation_; }
  const ConstructionOptions& options() const { return options_; }

  Window window(const Ball& ball) const override;
  double total_mass() const override { return 1.0; }

  // Each node whose bounding box has diameter below `spacing` as one atom
  // at its barycenter. Longer nodes whose children are spaced closer than
  // `spacing` (and generation-k segments) are cut into equal parts carrying
  // equal mass. Positions are within `spacing` of the mass they stand for.
  // Throws ResourceExhausted past `budget` atoms.
  std::vector<Atom> coarse_atoms(double spacing, std::size_t budget) const;

  struct Family {
    Rational width;   // child length over parent length
    Rational period;  // child spacing over parent length
  };
  struct Offset {
    Rational dy;
    Rational weight;  // mass fraction carried at this height
    double weight_d;
    double variance;  // horizontal variance of that mass, per unit length squared
  };

 private:
  friend struct WindowBuilder;

  Schedule schedule_;
  int generation_;
  ConstructionOptions options_;
  std::vector<Family> down_;  // index l: children of a generation l-1 segment
  std::vector<Family> up_;
  std::vector<Rational> span_;                 // span_[g]: height range of descendants of generation g
  std::vector<std::vector<Offset>> offsets_;   // offsets_[g]: generation-k heights below a generation g node
  std::vector<double> mean_dy_;                // mass-weighted mean of offsets_[g]
};

}  // namespace betacantor
