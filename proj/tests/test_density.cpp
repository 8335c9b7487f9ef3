#include <algorithm>
#include <cmath>
#include <random>

#include "betacantor/density.hpp"
#include "betacantor/error.hpp"
#include "doctest.h"

using namespace betacantor;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

SegmentMeasure long_line() { return SegmentMeasure({WeightedSegment({q(-1000000), q(0)}, {q(1000000), q(0)}, q(1))}); }

ScaleGrid grid(double lo, double hi, double lambda = 0.8408964152537145) { return ScaleGrid{lo, hi, lambda}; }

AtomicMeasure random_cloud(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Atom> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back({{u(rng), 0.2 * u(rng)}, 0.5 + u(rng)});
  return AtomicMeasure(std::move(atoms));
}

// Equal atoms along y = 0 on [0, 1].
AtomicMeasure atom_line(int n) {
  std::vector<Atom> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back({{(i + 0.5) / n, 0.0}, 1.0 / n});
  return AtomicMeasure(std::move(atoms));
}

// Direct sum, independent of the measure's index.
double brute_mass(const AtomicMeasure& mu, Point c, double r) {
  double m = 0.0;
  for (const auto& a : mu.atoms())
    if (std::hypot(a.position.x - c.x, a.position.y - c.y) <= r) m += a.mass;
  return m;
}

}  // namespace

TEST_CASE("density profiles of a line, an endpoint and an atom") {
  auto line = long_line();
  auto inner = density_profile(line, {q(0), q(0)}, grid(1e-3, 1));
  for (const auto& s : inner.samples) CHECK(s.ratio == doctest::Approx(1.0).epsilon(1e-12));
  SegmentMeasure half({WeightedSegment({q(0), q(0)}, {q(10), q(0)}, q(1))});
  auto end = density_profile(half, {q(0), q(0)}, grid(1e-3, 1));
  for (const auto& s : end.samples) CHECK(s.ratio == doctest::Approx(0.5).epsilon(1e-12));
  AtomicMeasure atom({{{0, 0}, 1}});
  auto prof = density_profile(atom, {q(0), q(0)}, grid(1e-3, 1));
  for (std::size_t i = 0; i < prof.samples.size(); ++i) {
    CHECK(prof.samples[i].ratio == doctest::Approx(1 / (2 * prof.samples[i].r)));
    if (i > 0) CHECK(prof.samples[i].r < prof.samples[i - 1].r);
  }
  CHECK(prof.upper() == doctest::Approx(1 / (2 * prof.samples.back().r)));
  CHECK(prof.lower() == doctest::Approx(0.5));
}

TEST_CASE("unrectifiability witness on the convergent schedule") {
  Schedule s = schedule_thm11(4);
  ConstructionMeasure mu(s, 4);
  std::mt19937_64 rng(11);
  double c_max = 0.0, c_min = INFINITY;
  for (int trial = 0; trial < 10; ++trial) {
    PointAddress x;
    // Children near the middle of their parent, so the probe ball stays inside it.
    for (int k = 1; k <= 4; ++k)
      x.segment.path.push_back({s.n_at(k) / 2 + Integer(static_cast<unsigned long>(rng() % 1000)), Branch::up});
    x.offset = segment_geometry(s, x.segment).length * q(static_cast<long>(rng() % 997), 997);
    auto rows = unrectifiability_witness(mu, s, x, 1, 3);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].r == doctest::Approx(rows[i].h / 2));
      c_max = std::max(c_max, rows[i].ratio / rows[i].a);
      c_min = std::min(c_min, rows[i].ratio / rows[i].a);
      if (i > 0) CHECK(rows[i].ratio < rows[i - 1].ratio);
    }
  }
  // One constant serves every k, and it is of order one.
  CHECK(c_max <= 2.0);
  CHECK(c_min >= 0.25);

  PointAddress down;
  for (int k = 1; k <= 4; ++k) down.segment.path.push_back({Integer(1), Branch::down});
  down.offset = 0;
  CHECK_THROWS_AS(unrectifiability_witness(mu, s, down, 1, 3), InvalidArgument);
}

TEST_CASE("doubling scales: line and atom") {
  auto line = long_line();
  auto g = grid(1e-3, 1);
  double big = 100;
  // mu(B(x, r)) = 2r, so the density condition needs C_* >= 1/(5 Lambda).
  CHECK(doubling_scales(line, {q(0), q(0)}, big, 1.0 / (5 * big), g).size() == g.radii().size());
  CHECK(doubling_scales(line, {q(0), q(0)}, big, 0.99 / (5 * big), g).empty());

  double m = 0.5, c_star = 0.01;
  AtomicMeasure atom({{{0, 0}, m}});
  auto got = doubling_scales(atom, {q(0), q(0)}, big, c_star, g);
  std::vector<double> want;
  for (double r : g.radii())
    if (r >= m / (10 * c_star * big)) want.push_back(r);
  CHECK(got == want);
  CHECK_THROWS_AS(doubling_scales(atom, {q(0), q(0)}, 2.0, c_star, g), InvalidArgument);
}

TEST_CASE("doubling descent meets both conclusions") {
  std::mt19937_64 rng(5);
  auto mu = random_cloud(rng, 400);
  double big = 4, c_star = 600;
  int found = 0;
  for (int t = 0; t < 200; ++t) {
    Point x = mu.atoms()[rng() % mu.size()].position;
    double s = 0.3;
    if (mu.mass_within(x, s) / s > 2 * c_star) continue;
    auto d = doubling_descent(mu, x, s, big, c_star);
    REQUIRE(d);  // an atom at x forces the ratio up eventually
    ++found;
    CHECK(d->steps >= 1);
    CHECK(d->r == doctest::Approx(s * std::pow(big, -d->steps)));
    CHECK(brute_mass(mu, x, big * d->r) <= big * brute_mass(mu, x, d->r) * (1 + 1e-12));
    CHECK(brute_mass(mu, x, d->r) <= 3 * c_star * big * d->r * (1 + 1e-12));
    CHECK(doubling_test(mu, x, d->r, big, c_star).passes());
  }
  CHECK(found > 100);
  CHECK_THROWS_AS(doubling_descent(mu, mu.atoms()[0].position, 1e-9, big, c_star), InvalidArgument);
}

TEST_CASE("doubling radii exist at most sampled points of a cloud") {
  std::mt19937_64 rng(9);
  auto mu = random_cloud(rng, 300);
  double covered = 0;
  for (int t = 0; t < 100; ++t) {
    Point x = mu.atoms()[rng() % mu.size()].position;
    if (!doubling_scales(mu, to_rational(x), 100, 2.0, grid(1e-4, 1e-1)).empty()) ++covered;
  }
  CHECK(covered / 100 > 0.9);
}

TEST_CASE("C_* estimate is a quantile of the grid minima") {
  AtomicMeasure mu({{{0, 0}, 1}, {{10, 0}, 2}, {{20, 0}, 3}, {{30, 0}, 4}});
  std::vector<Point> pts;
  for (const auto& a : mu.atoms()) pts.push_back(a.position);
  auto g = grid(0.5, 1, 0.5);  // radii 1, 0.5
  CHECK(estimate_c_star(mu, pts, g, 0.9) == doctest::Approx(4.0));
  CHECK(estimate_c_star(mu, pts, g, 0.5) == doctest::Approx(2.0));
  CHECK(estimate_c_star(mu, pts, g, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("mu tilde: exact masses, disjoint doubling balls, coverage") {
  std::mt19937_64 rng(21);
  for (int inst = 0; inst < 5; ++inst) {
    auto mu = random_cloud(rng, 150);
    MuTildeOptions o;
    o.big_lambda = 100;
    o.rho = 0.05;
    o.epsilon = 0.125;
    o.c_star = 50;
    auto t = build_mu_tilde(mu, o);
    CHECK(t.covered_mass >= (1 - o.epsilon) * t.total_mass);
    REQUIRE(t.measure.size() == t.balls.size());
    for (std::size_t i = 0; i < t.balls.size(); ++i) {
      const auto& b = t.balls[i];
      CHECK(b.radius <= o.rho);
      CHECK(t.measure.segments()[i].mass() == rational_from_double(b.mass));
      CHECK(b.mass == doctest::Approx(brute_mass(mu, b.center, b.radius)).epsilon(1e-14));
      double big_mass = brute_mass(mu, b.center, o.big_lambda * b.radius);
      CHECK(big_mass <= 2 * o.big_lambda * o.big_lambda * b.mass);
      CHECK(b.mass <= 10 * o.c_star * o.big_lambda * b.radius);
      CHECK(t.measure.segments()[i].length() == rational_from_double(b.radius));
      for (std::size_t j = 0; j < i; ++j) {
        const auto& c = t.balls[j];
        Rational dx = rational_from_double(b.center.x) - rational_from_double(c.center.x);
        Rational dy = rational_from_double(b.center.y) - rational_from_double(c.center.y);
        Rational rr = rational_from_double(b.radius) + rational_from_double(c.radius);
        CHECK(dx * dx + dy * dy > rr * rr);
      }
    }
    double covered = 0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (t.covered[i]) covered += mu.atoms()[i].mass;
    CHECK(covered == doctest::Approx(t.covered_mass));
  }
}

TEST_CASE("mu tilde of a segment is flat above rho") {
  auto mu = atom_line(2000);
  MuTildeOptions o;
  o.big_lambda = 100;
  o.rho = 0.01;
  o.epsilon = 0.1;
  o.c_star = 1;
  auto t = build_mu_tilde(mu, o);
  CHECK(t.covered_mass >= 0.9);
  for (double r : grid(o.rho, 1).radii()) {
    CHECK(beta(t.measure, RationalPoint{q(1, 2), q(0)}, rational_from_double(r), 2, BetaVariant::beta).value <=
          1e-12);
    CHECK(beta(t.measure, RationalPoint{q(1, 5), q(0)}, rational_from_double(r), 2, BetaVariant::beta).value <=
          1e-12);
  }
  o.rho = 1e-9;
  CHECK_THROWS_AS(build_mu_tilde(mu, o), ResourceExhausted);
}

TEST_CASE("maximal function: line, atom, restriction, refinement") {
  auto line = long_line();
  auto radii = grid(1e-3, 10).radii();
  CHECK(maximal_function(line, {0, 0}, radii) == doctest::Approx(2.0));

  AtomicMeasure atom({{{0.3, 0}, 1}});
  for (double r_lo : {0.1, 0.3, 0.5}) {
    std::vector<double> rs{r_lo, 0.3, 0.7, 2.0};
    rs.erase(std::remove_if(rs.begin(), rs.end(), [&](double r) { return r < r_lo; }), rs.end());
    CHECK(maximal_function(atom, {0, 0}, rs) == doctest::Approx(1 / std::max(0.3, r_lo)));
  }

  std::mt19937_64 rng(3);
  auto mu = random_cloud(rng, 100);
  std::vector<Atom> half(mu.atoms().begin(), mu.atoms().begin() + 50);
  AtomicMeasure part(half);
  auto coarse = grid(1e-2, 1, 0.5).radii();
  auto fine = coarse;
  for (double r : coarse) fine.push_back(r * std::sqrt(0.5));
  for (int i = 0; i < 30; ++i) {
    Point x{std::uniform_real_distribution<double>(0, 1)(rng), 0.1};
    CHECK(maximal_function(part, x, coarse) <= maximal_function(mu, x, coarse));
    CHECK(maximal_function(mu, x, coarse) <= maximal_function(mu, x, fine));
  }
}

TEST_CASE("restricted maximal comparison on small instances") {
  std::mt19937_64 rng(31);
  double worst = 0;
  for (int inst = 0; inst < 10; ++inst) {
    auto mu = random_cloud(rng, 80);
    MuTildeOptions o;
    o.rho = 0.02;
    o.epsilon = 0.125;
    o.c_star = 50;
    auto t = build_mu_tilde(mu, o);
    auto c = compare_maximal(mu, t, grid(o.rho, 4).radii());
    CHECK(c.lhs > 0);
    CHECK(c.rhs > 0);
    worst = std::max(worst, c.ratio);
  }
  CHECK(worst < 10);
}

TEST_CASE("beta transfer on a flat instance vanishes") {
  auto mu = atom_line(500);
  MuTildeOptions o;
  o.rho = 0.02;
  o.epsilon = 0.1;
  o.c_star = 1;
  auto t = build_mu_tilde(mu, o);
  auto rows = beta_transfer(mu, t, grid(o.rho, 0.5), 8);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(r.tilde_square <= 1e-20);
    CHECK(r.correction > 0);
  }
}
