#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "betacantor/geometry.hpp"

namespace betacantor {

// Closed horizontal segment with constant linear density.
struct WeightedSegment {
  RationalPoint left;
  RationalPoint right;
  Rational density;

  WeightedSegment(RationalPoint l, RationalPoint r, Rational d);

  Rational length() const { return right.x - left.x; }
  Rational mass() const { return density * length(); }
  const Rational& y() const { return left.y; }
};

struct Atom {
  Point position;
  double mass = 0.0;
};

// Part of a measure inside a ball, in coordinates u = (y - center) / r.
// Masses are divided by r, so segment densities are unchanged and the
// normalized mass equals mu(B) / r.
struct WindowSegment {
  double x0, x1, y, density;
};

struct WindowAtom {
  double x, y, mass;
};

struct Window {
  std::vector<WindowSegment> segments;
  std::vector<WindowAtom> atoms;
  std::size_t touched = 0;  // pieces or tree nodes inspected

  double mass() const;
  bool empty() const { return segments.empty() && atoms.empty(); }
  std::size_t pieces() const { return segments.size() + atoms.size(); }
};

class Measure {
 public:
  virtual ~Measure() = default;

  virtual Window window(const Ball& ball) const = 0;
  virtual double ball_mass(const Ball& ball) const;
  virtual double total_mass() const = 0;
};

class SegmentMeasure : public Measure {
 public:
  SegmentMeasure() = default;
  explicit SegmentMeasure(std::vector<WeightedSegment> segments,
                          std::optional<int> generation = std::nullopt);

  const std::vector<WeightedSegment>& segments() const { return segments_; }
  std::optional<int> generation() const { return generation_; }
  std::size_t size() const { return segments_.size(); }

  Rational exact_total_mass() const;

  Window window(const Ball& ball) const override;
  double ball_mass(const Ball& ball) const override;
  double total_mass() const override { return to_double(exact_total_mass()); }

 private:
  std::vector<WeightedSegment> segments_;
  std::optional<int> generation_;
};

class AtomicMeasure : public Measure {
 public:
  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  Window window(const Ball& ball) const override;
  double ball_mass(const Ball& ball) const override;
  double total_mass() const override { return total_; }

  // Mass inside the closed ball, summed in x order.
  double mass_within(Point center, double radius) const;

  // Indices of atoms inside the closed ball, ascending.
  std::vector<std::size_t> members(Point center, double radius) const;

 private:
  std::vector<Atom> atoms_;
  static constexpr std::size_t kBlock = 128;

  std::vector<std::size_t> by_x_;
  std::vector<double> block_mass_;  // sums over consecutive kBlock atoms in x order
  double y_lo_ = INFINITY, y_hi_ = -INFINITY;
  double total_ = 0.0;
};

// Sum of several measures; the parts are borrowed.
class SumMeasure : public Measure {
 public:
  explicit SumMeasure(std::vector<const Measure*> parts) : parts_(std::move(parts)) {}

  Window window(const Ball& ball) const override;
  double total_mass() const override;

 private:
  std::vector<const Measure*> parts_;
};

struct SegmentClip {
  Rational x0;
  Rational x1;
  bool exact = true;
};

// The closed sub-interval of seg inside the closed ball. When the chord is
// irrational the returned endpoints are rational and lie inside the ball,
// within one ulp of the true ones.
std::optional<SegmentClip> clip_segment_to_ball(const WeightedSegment& seg, const Ball& ball);

double ball_mass(const Measure& mu, const Ball& ball);

// Integral of dist(y, L)^p over seg restricted to the ball, in original units.
double segment_line_p_moment(const WeightedSegment& seg, const Ball& clip, const Line& line, double p);

double diam(const std::vector<WeightedSegment>& segments);
double diam(const std::vector<Atom>& atoms);

// Text format: "S x0 y0 x1 y1 density" and "A x y mass" records, '#' comments.
struct MeasureFile {
  std::vector<WeightedSegment> segments;
  std::vector<Atom> atoms;
};

void write_measure(std::ostream& out, const SegmentMeasure& mu);
void write_measure(std::ostream& out, const AtomicMeasure& mu);
MeasureFile read_measure(std::istream& in);

}  // namespace betacantor
