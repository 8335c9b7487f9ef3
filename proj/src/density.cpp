#include "betacantor/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "betacantor/error.hpp"
#include "betacantor/parallel.hpp"

namespace betacantor {

double DensityProfile::lower() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) v = std::min(v, s.ratio);
  return v;
}

double DensityProfile::upper() const {
  double v = 0.0;
  for (const auto& s : samples) v = std::max(v, s.ratio);
  return v;
}

DensityProfile density_profile(const Measure& mu, const RationalPoint& x, const ScaleGrid& grid) {
  DensityProfile out;
  out.x = to_point(x);
  for (double r : grid.radii()) out.samples.push_back({r, mu.ball_mass(Ball(x, rational_from_double(r))) / (2 * r)});
  return out;
}

std::vector<WitnessRow> unrectifiability_witness(const Measure& mu_j, const Schedule& s, const PointAddress& x,
                                                 int k_lo, int k_hi) {
  require(1 <= k_lo && k_lo <= k_hi, "witness needs 1 <= k_lo <= k_hi");
  require(k_hi <= x.segment.depth(), "witness point is shallower than the probed generation");
  RationalPoint p = point_of(s, x);
  std::vector<WitnessRow> rows;
  for (int k = k_lo; k <= k_hi; ++k) {
    if (classify(x, k) != Side::up) throw InvalidArgument("witness point is not in U_k for k = " + std::to_string(k));
    WitnessRow row;
    row.k = k;
    row.h = s.h_d(k);
    row.a = s.a_d(k);
    Rational r = s.h_at(k) / 2;
    row.r = to_double(r);
    row.ratio = mu_j.ball_mass(Ball(p, r)) / (2 * row.r);
    rows.push_back(row);
  }
  return rows;
}

void write_witness_csv(std::ostream& out, const std::vector<WitnessRow>& rows) {
  char buf[256];
  out << "k,h,a,r,ratio,ratio_over_a\n";
  for (const auto& w : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", w.k, w.h, w.a, w.r, w.ratio, w.ratio / w.a);
    out << buf;
  }
}

namespace {

double mass_at(const Measure& mu, Point x, double r) {
  if (auto* atomic = dynamic_cast<const AtomicMeasure*>(&mu)) return atomic->mass_within(x, r);
  return mu.ball_mass(Ball::from_doubles(x, r));
}

}  // namespace

DoublingTest doubling_test(const Measure& mu, Point x, double r, double big_lambda, double c_star) {
  require(big_lambda > 2, "doubling needs Lambda > 2");
  require(r > 0, "radius must be positive");
  DoublingTest t;
  t.mass = mass_at(mu, x, r);
  t.dilated_mass = mass_at(mu, x, big_lambda * r);
  t.doubling = t.dilated_mass <= 2 * big_lambda * big_lambda * t.mass;
  t.density = t.mass <= 10 * c_star * big_lambda * r;
  return t;
}

std::vector<double> doubling_scales(const Measure& mu, const RationalPoint& x, double big_lambda, double c_star,
                                    const ScaleGrid& grid) {
  std::vector<double> out;
  Point c = to_point(x);
  for (double r : grid.radii())
    if (doubling_test(mu, c, r, big_lambda, c_star).passes()) out.push_back(r);
  return out;
}

std::optional<Descent> doubling_descent(const Measure& mu, Point x, double s, double big_lambda, double c_star,
                                        int max_steps) {
  require(big_lambda > 2, "doubling needs Lambda > 2");
  require(s > 0 && c_star > 0, "descent needs s > 0 and C_* > 0");
  require(mass_at(mu, x, s) / s <= 2 * c_star, "descent must start where mu(B(x, s))/s <= 2 C_*");
  double r = s;
  for (int j = 1; j <= max_steps; ++j) {
    r /= big_lambda;
    if (mass_at(mu, x, r) / r >= 3 * c_star) return Descent{s, r, j};
  }
  return std::nullopt;
}

double estimate_c_star(const Measure& mu, const std::vector<Point>& points, const ScaleGrid& grid, double quantile) {
  require(!points.empty(), "C_* estimate needs sample points");
  require(quantile >= 0 && quantile <= 1, "quantile must lie in [0, 1]");
  auto radii = grid.radii();
  std::vector<double> lows = parallel_map<double>(points.size(), [&](std::size_t i) {
    double low = std::numeric_limits<double>::infinity();
    for (double r : radii) low = std::min(low, mass_at(mu, points[i], r) / r);
    return low;
  });
  // Nearest-rank quantile.
  double rank = std::ceil(quantile * static_cast<double>(lows.size()));
  std::size_t idx = rank < 1 ? 0 : std::min(lows.size(), static_cast<std::size_t>(rank)) - 1;
  std::nth_element(lows.begin(), lows.begin() + static_cast<std::ptrdiff_t>(idx), lows.end());
  return lows[idx];
}

void MuTildeOptions::validate() const {
  require(big_lambda > 2, "Lambda must exceed 2");
  require(rho > 0 && std::isfinite(rho), "rho must be positive");
  require(epsilon > 0 && epsilon < 0.5, "epsilon must lie in (0, 1/2)");
  require(c_star > 0, "C_* must be positive");
  require(lambda > 0 && lambda < 1, "radius grid ratio must lie in (0, 1)");
  require(max_rounds > 0, "at least one selection round is needed");
}

namespace {

// Selected balls indexed by center x, for disjointness queries.
class BallIndex {
 public:
  void add(const SelectedBall& b) {
    by_x_.emplace(b.center.x, b);
    max_r_ = std::max(max_r_, b.radius);
  }

  bool disjoint(Point c, double r) const {
    auto lo = by_x_.lower_bound(c.x - r - max_r_);
    for (auto it = lo; it != by_x_.end() && it->first <= c.x + r + max_r_; ++it) {
      const SelectedBall& b = it->second;
      if (distance(b.center, c) <= b.radius + r) return false;
    }
    return true;
  }

 private:
  std::multimap<double, SelectedBall> by_x_;
  double max_r_ = 0.0;
};

}  // namespace

MuTilde build_mu_tilde(const AtomicMeasure& mu, const MuTildeOptions& o) {
  o.validate();
  const auto& atoms = mu.atoms();
  MuTilde out;
  out.total_mass = mu.total_mass();
  out.covered.assign(atoms.size(), false);
  double min_mass = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms)
    if (a.mass > 0) min_mass = std::min(min_mass, a.mass);
  // Below m / (10 C_* Lambda) the density condition fails for any atom of mass m.
  double floor_r = std::isfinite(min_mass) ? min_mass / (10 * o.c_star * o.big_lambda) : o.rho;
  std::vector<double> radii;
  for (double r = o.rho; r >= floor_r * (1 - 1e-12) && radii.size() < 4096; r *= o.lambda) radii.push_back(r);

  BallIndex index;
  double uncovered = out.total_mass;
  while (uncovered > o.epsilon * out.total_mass) {
    if (out.rounds >= o.max_rounds) throw ResourceExhausted("mu tilde: coverage not reached within the round limit");
    ++out.rounds;
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (!out.covered[i] && atoms[i].mass > 0) open.push_back(i);
    auto proposals = parallel_map<std::optional<SelectedBall>>(open.size(), [&](std::size_t j) {
      Point c = atoms[open[j]].position;
      for (double r : radii) {
        if (!index.disjoint(c, r)) continue;
        DoublingTest t = doubling_test(mu, c, r, o.big_lambda, o.c_star);
        if (t.passes()) return std::optional<SelectedBall>(SelectedBall{c, r, t.mass, t.dilated_mass});
      }
      return std::optional<SelectedBall>();
    });
    std::vector<SelectedBall> cand;
    for (auto& p : proposals)
      if (p) cand.push_back(*p);
    std::sort(cand.begin(), cand.end(), [](const SelectedBall& a, const SelectedBall& b) {
      if (a.mass != b.mass) return a.mass > b.mass;
      if (a.center.x != b.center.x) return a.center.x < b.center.x;
      return a.center.y < b.center.y;
    });
    std::size_t accepted = 0;
    for (const auto& b : cand) {
      if (!index.disjoint(b.center, b.radius)) continue;
      if (out.balls.size() >= o.max_balls) throw ResourceExhausted("mu tilde: ball budget exhausted");
      index.add(b);
      out.balls.push_back(b);
      ++accepted;
      for (std::size_t i : mu.members(b.center, b.radius))
        if (!out.covered[i]) {
          out.covered[i] = true;
          uncovered -= atoms[i].mass;
        }
    }
    if (accepted == 0) throw ResourceExhausted("mu tilde: no admissible ball remains; rho is too small for the data");
  }
  out.covered_mass = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (out.covered[i]) out.covered_mass += atoms[i].mass;

  std::vector<WeightedSegment> disks;
  disks.reserve(out.balls.size());
  for (const auto& b : out.balls) {
    if (b.mass <= 0) continue;
    Rational cx = rational_from_double(b.center.x), cy = rational_from_double(b.center.y);
    Rational half = rational_from_double(b.radius) / 2;
    disks.emplace_back(RationalPoint{cx - half, cy}, RationalPoint{cx + half, cy},
                       rational_from_double(b.mass) / (2 * half));
  }
  out.measure = SegmentMeasure(std::move(disks));
  return out;
}

double maximal_function(const Measure& mu, Point x, const std::vector<double>& radii) {
  double m = 0.0;
  for (double r : radii) {
    require(r > 0, "radii must be positive");
    m = std::max(m, mass_at(mu, x, r) / r);
  }
  return m;
}

namespace {

struct WeightedPoint {
  Point x;
  double w;
};

// Every point when there are few, otherwise a stride sample whose weights
// are rescaled to the same total.
std::vector<WeightedPoint> thin(std::vector<WeightedPoint> pts, std::size_t max_points) {
  if (pts.size() <= max_points || max_points == 0) return pts;
  double total = 0.0, kept = 0.0;
  for (const auto& p : pts) total += p.w;
  std::vector<WeightedPoint> out;
  double stride = double(pts.size()) / double(max_points);
  for (std::size_t i = 0; i < max_points; ++i) {
    out.push_back(pts[static_cast<std::size_t>(i * stride)]);
    kept += out.back().w;
  }
  if (kept > 0)
    for (auto& p : out) p.w *= total / kept;
  return out;
}

double integrate_maximal(const Measure& mu, const std::vector<WeightedPoint>& pts, const std::vector<double>& radii) {
  auto vals = parallel_map<double>(pts.size(), [&](std::size_t i) { return maximal_function(mu, pts[i].x, radii); });
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) s += vals[i] * pts[i].w;
  return s;
}

}  // namespace

MaximalComparison compare_maximal(const AtomicMeasure& mu, const MuTilde& tilde, const std::vector<double>& radii,
                                  int nodes_per_disk, std::size_t max_points) {
  require(nodes_per_disk >= 1, "at least one node per disk");
  require(tilde.covered.size() == mu.size(), "mu tilde was built from a different measure");
  std::vector<Atom> kept;
  std::vector<WeightedPoint> lhs_pts;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (tilde.covered[i]) {
      kept.push_back(mu.atoms()[i]);
      lhs_pts.push_back({mu.atoms()[i].position, mu.atoms()[i].mass});
    }
  AtomicMeasure restricted(std::move(kept));
  std::vector<WeightedPoint> rhs_pts;
  for (const auto& seg : tilde.measure.segments()) {
    double x0 = to_double(seg.left.x), x1 = to_double(seg.right.x), y = to_double(seg.y());
    double m = to_double(seg.mass()) / nodes_per_disk;
    for (int q = 0; q < nodes_per_disk; ++q) rhs_pts.push_back({{x0 + (x1 - x0) * (q + 0.5) / nodes_per_disk, y}, m});
  }
  MaximalComparison c;
  auto l = thin(std::move(lhs_pts), max_points);
  auto r = thin(std::move(rhs_pts), max_points);
  c.points = l.size() + r.size();
  c.lhs = integrate_maximal(restricted, l, radii);
  c.rhs = integrate_maximal(tilde.measure, r, radii);
  c.ratio = c.rhs > 0 ? c.lhs / c.rhs : (c.lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  return c;
}

std::vector<TransferRow> beta_transfer(const Measure& mu, const MuTilde& tilde, const ScaleGrid& grid,
                                       std::size_t samples, unsigned threads) {
  auto radii = grid.radii();
  double w = grid.weight();
  std::vector<std::size_t> pick;
  std::size_t n = tilde.balls.size();
  if (n == 0 || samples == 0) return {};
  double stride = double(n) / double(std::min(samples, n));
  for (std::size_t i = 0; i < std::min(samples, n); ++i) pick.push_back(static_cast<std::size_t>(i * stride));
  return parallel_map<TransferRow>(
      pick.size(),
      [&](std::size_t i) {
        const SelectedBall& b = tilde.balls[pick[i]];
        RationalPoint x = to_rational(b.center);
        TransferRow row;
        row.x = b.center;
        for (double r : radii) {
          double bt = beta_pair(tilde.measure, Ball(x, rational_from_double(r)), 2).beta;
          double bm = beta_pair(mu, Ball(x, rational_from_double(20 * r)), 2).beta;
          row.tilde_square += bt * bt * w;
          row.mu_square += bm * bm * w;
          double corr = 0.0;
          for (const auto& o : tilde.balls)
            if (distance(o.center, b.center) <= 20 * r + o.radius) corr += 4 * o.radius * o.radius * o.mass / (r * r * r);
          row.correction += corr * w;
        }
        double den = row.mu_square + row.correction;
        row.ratio = den > 0 ? row.tilde_square / den : 0.0;
        return row;
      },
      threads);
}

}  // namespace betacantor
