#pragma once

#include <cmath>
#include <numbers>

#include "betacantor/rational.hpp"

namespace betacantor {

struct RationalPoint {
  Rational x;
  Rational y;

  bool operator==(const RationalPoint&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

inline Point to_point(const RationalPoint& p) { return {to_double(p.x), to_double(p.y)}; }

inline RationalPoint to_rational(const Point& p) {
  return {rational_from_double(p.x), rational_from_double(p.y)};
}

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Closed ball. Center and radius are exact so that queries at tiny scales
// keep full resolution; the double accessors are for coarse work.
struct Ball {
  RationalPoint center;
  Rational radius;

  Ball(RationalPoint c, Rational r);
  static Ball from_doubles(Point c, double r);

  Point center_d() const { return to_point(center); }
  double radius_d() const { return to_double(radius); }
  bool contains(const RationalPoint& p) const;
};

// Unit normal (cos phi, sin phi); exact for the axis directions, where the
// library cosine would leave a 6e-17 residue.
inline Point line_normal(double phi) {
  if (phi == std::numbers::pi / 2) return {0.0, 1.0};
  if (phi == 0.0) return {1.0, 0.0};
  return {std::cos(phi), std::sin(phi)};
}

// {y : <y, (cos phi, sin phi)> = c} with phi in [0, pi).
struct Line {
  double phi = 0.0;
  double c = 0.0;

  // Normal form from a (not necessarily unit, nonzero) normal vector.
  static Line from_normal(double nx, double ny, double c);
  static Line horizontal(double y) { return {std::numbers::pi / 2, y}; }

  double distance(const Point& p) const {
    Point n = line_normal(phi);
    return std::abs(p.x * n.x + p.y * n.y - c);
  }
};

}  // namespace betacantor
