#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "betacantor/error.hpp"
#include "betacantor/measure.hpp"
#include "betacantor/moments.hpp"
#include "doctest.h"

using namespace betacantor;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

WeightedSegment unit_segment() { return WeightedSegment({q(0), q(0)}, {q(1), q(0)}, q(1)); }

// Adaptive Simpson, the independent reference for the closed-form moments.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double quadrature(const std::function<double(double)>& f, double a, double b, double tol) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 50);
}

}  // namespace

TEST_CASE("clipping a segment to a ball") {
  auto seg = unit_segment();
  auto c1 = clip_segment_to_ball(seg, Ball({q(1, 2), q(0)}, q(1, 4)));
  REQUIRE(c1);
  CHECK(c1->x0 == q(1, 4));
  CHECK(c1->x1 == q(3, 4));
  CHECK(c1->exact);

  auto c2 = clip_segment_to_ball(seg, Ball({q(0), q(3, 5)}, q(1)));
  REQUIRE(c2);
  CHECK(c2->x0 == q(0));
  CHECK(c2->x1 == q(4, 5));
  CHECK(c2->exact);

  CHECK_FALSE(clip_segment_to_ball(seg, Ball({q(1, 2), q(2)}, q(1))));
}

TEST_CASE("clipped pieces lie in the segment and the ball") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  int nonempty = 0, inexact = 0;
  for (int i = 0; i < 500; ++i) {
    double a = u(rng), b = u(rng);
    if (a == b) continue;
    Rational y = rational_from_double(u(rng) / 3);
    WeightedSegment seg({rational_from_double(std::min(a, b)), y}, {rational_from_double(std::max(a, b)), y}, q(1));
    Ball ball = Ball::from_doubles({u(rng), u(rng) / 3}, 0.05 + std::abs(u(rng)));
    auto c = clip_segment_to_ball(seg, ball);
    if (!c) continue;
    ++nonempty;
    if (!c->exact) ++inexact;
    for (const Rational& x : {c->x0, c->x1, Rational((c->x0 + c->x1) / 2)}) {
      CHECK(x >= seg.left.x);
      CHECK(x <= seg.right.x);
      CHECK(ball.contains({x, seg.y()}));
    }
  }
  CHECK(nonempty > 100);
  CHECK(inexact > 50);
}

TEST_CASE("ball masses") {
  SegmentMeasure mu0({unit_segment()});
  CHECK(ball_mass(mu0, Ball({q(1, 2), q(0)}, q(1, 4))) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ball_mass(mu0, Ball({q(1, 2), q(3, 4)}, q(1, 4))) == 0.0);
  AtomicMeasure atoms({{{-1, 0}, 1}, {{1, 0}, 1}, {{-1, 0.2}, 1}, {{1, 0.2}, 1}});
  CHECK(ball_mass(atoms, Ball({q(0), q(1, 10)}, q(2))) == 4.0);
}

TEST_CASE("ball mass is monotone in the radius and additive") {
  SegmentMeasure a({WeightedSegment({q(0), q(0)}, {q(1), q(0)}, q(2)),
                    WeightedSegment({q(0), q(1, 10)}, {q(1, 2), q(1, 10)}, q(1))});
  SegmentMeasure b({WeightedSegment({q(1, 3), q(1, 5)}, {q(2), q(1, 5)}, q(1, 3))});
  SumMeasure ab({&a, &b});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Point c{u(rng), u(rng) * 0.3};
    double r1 = 0.01 + u(rng), r2 = r1 * (1 + u(rng));
    auto b1 = Ball::from_doubles(c, r1), b2 = Ball::from_doubles(c, r2);
    CHECK(a.ball_mass(b1) <= a.ball_mass(b2));
    CHECK(ab.ball_mass(b1) == doctest::Approx(a.ball_mass(b1) + b.ball_mass(b1)).epsilon(1e-12));
  }
}

TEST_CASE("segment moments against a diagonal line") {
  auto seg = unit_segment();
  Ball all({q(0), q(0)}, q(10));
  Line diag = Line::from_normal(-1, 1, 0);  // y = x
  CHECK(segment_line_p_moment(seg, all, Line::horizontal(0), 2) == 0.0);
  // dist((t, 0), y = x)^2 = t^2 / 2, so the moment is 1/6.
  CHECK(segment_line_p_moment(seg, all, diag, 2) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(segment_line_p_moment(seg, all, diag, 2) ==
        doctest::Approx(quadrature([](double t) { return t * t / 2; }, 0, 1, 1e-15)).epsilon(1e-12));
  CHECK(segment_line_p_moment(seg, all, diag, 1) == doctest::Approx(1.0 / (2 * std::sqrt(2.0))).epsilon(1e-14));
  CHECK_THROWS_AS(segment_line_p_moment(seg, all, diag, 0.5), InvalidArgument);
}

TEST_CASE("closed-form moments match quadrature") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double ps[] = {1.0, 1.5, 2.0, 3.0};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double p = ps[i % 4];
    double x0 = u(rng), x1 = x0 + 0.01 + std::abs(u(rng));
    double y = u(rng);
    double phi = std::abs(u(rng)) * std::numbers::pi;
    double c = u(rng);
    WeightedSegment seg({rational_from_double(x0), rational_from_double(y)},
                        {rational_from_double(x1), rational_from_double(y)}, q(3, 2));
    Line line{phi, c};
    double closed = segment_line_p_moment(seg, Ball({q(0), q(0)}, q(100)), line, p);
    double cs = std::cos(phi), sn = std::sin(phi);
    auto f = [&](double t) { return 1.5 * std::pow(std::abs(cs * t + sn * y - c), p); };
    double kink = cs != 0 ? (c - sn * y) / cs : x0;
    double ref = 0.0;
    if (kink > x0 && kink < x1) ref = quadrature(f, x0, kink, 1e-15) + quadrature(f, kink, x1, 1e-15);
    else ref = quadrature(f, x0, x1, 1e-15);
    double rel = std::abs(closed - ref) / std::max(ref, 1e-300);
    worst = std::max(worst, rel);
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("moment vanishes exactly when the clipped piece lies on the line") {
  WeightedSegment seg({q(0), q(1, 3)}, {q(1), q(1, 3)}, q(1));
  Ball all({q(0), q(0)}, q(5));
  CHECK(segment_line_p_moment(seg, all, Line::horizontal(1.0 / 3), 1.5) < 1e-15);
  CHECK(segment_line_p_moment(seg, all, Line::horizontal(1.0 / 3 + 1e-6), 1.5) > 0.0);
  // Near-parallel series branch agrees with the exact power.
  // The integral of (0.5 + e t)^2.5 is 0.5^2.5 (1 + 2.5 e) + O(e^2).
  CHECK(segment_moment(1e-9, 0.5, 0, 1, 2.5) ==
        doctest::Approx(std::pow(0.5, 2.5) * (1 + 2.5e-9)).epsilon(1e-14));
}

TEST_CASE("diameters") {
  CHECK(diam(std::vector<Atom>{{{0.3, 0.2}, 1}}) == 0.0);
  double h = 0.01;
  std::vector<WeightedSegment> two{WeightedSegment({q(0), q(0)}, {q(1), q(0)}, q(1)),
                                   WeightedSegment({q(0), q(1, 100)}, {q(1), q(1, 100)}, q(1))};
  CHECK(diam(two) == doctest::Approx(std::sqrt(1 + h * h)).epsilon(1e-15));
  CHECK(diam(std::vector<Atom>{{{0, 0}, 1}, {{3, 4}, 1}}) == 5.0);
}

TEST_CASE("measure text round trip") {
  SegmentMeasure mu({WeightedSegment({q(1, 3), q(-2, 7)}, {q(5, 3), q(-2, 7)}, q(9, 4))});
  AtomicMeasure atoms({{{0.125, -3.5}, 0.25}});
  std::stringstream ss;
  ss << "# comment\n";
  write_measure(ss, mu);
  write_measure(ss, atoms);
  MeasureFile f = read_measure(ss);
  REQUIRE(f.segments.size() == 1);
  CHECK(f.segments[0].left.x == q(1, 3));
  CHECK(f.segments[0].density == q(9, 4));
  REQUIRE(f.atoms.size() == 1);
  CHECK(f.atoms[0].position.y == -3.5);
  std::stringstream bad("S 0 0 1 1 1\n");
  CHECK_THROWS_AS(read_measure(bad), InvalidArgument);
}

TEST_CASE("atomic ball mass agrees with a direct sum on thin and wide clouds") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double height : {1e-3, 0.5}) {
    std::vector<Atom> atoms;
    for (int i = 0; i < 3000; ++i) atoms.push_back({{u(rng), height * u(rng)}, u(rng)});
    AtomicMeasure mu(atoms);
    for (int t = 0; t < 200; ++t) {
      Point c{u(rng), height * u(rng)};
      double r = std::pow(10.0, -3 * u(rng));
      double direct = 0.0;
      for (const auto& a : atoms)
        if ((a.position.x - c.x) * (a.position.x - c.x) + (a.position.y - c.y) * (a.position.y - c.y) <= r * r)
          direct += a.mass;
      CHECK(mu.mass_within(c, r) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}
