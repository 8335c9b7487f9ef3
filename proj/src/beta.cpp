#include "betacantor/beta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "betacantor/error.hpp"
#include "betacantor/moments.hpp"
#include "betacantor/parallel.hpp"

namespace betacantor {

std::string to_string(BetaVariant v) { return v == BetaVariant::beta ? "beta" : "beta_tilde"; }

BetaVariant parse_variant(const std::string& name) {
  if (name == "beta") return BetaVariant::beta;
  if (name == "beta_tilde" || name == "betaTilde" || name == "tilde") return BetaVariant::beta_tilde;
  throw InvalidArgument("unknown beta variant '" + name + "'");
}

double window_objective(const Window& w, Point n, double c, double p) {
  double total = 0.0;
  for (const auto& s : w.segments) total += s.density * segment_moment(n.x, n.y * s.y - c, s.x0, s.x1, p);
  for (const auto& a : w.atoms) total += a.mass * abs_pow(n.x * a.x + n.y * a.y - c, p);
  return total;
}

namespace {

// Minus 1/p times the derivative of the objective in c; decreasing in c.
double offset_slope(const Window& w, Point n, double c, double p) {
  double total = 0.0;
  for (const auto& s : w.segments) total += s.density * segment_moment_slope(n.x, n.y * s.y - c, s.x0, s.x1, p);
  for (const auto& a : w.atoms) {
    double u = n.x * a.x + n.y * a.y - c;
    if (u == 0.0) continue;
    double v = p == 1.0 ? 1.0 : abs_pow(u, p - 1.0);
    total += u > 0 ? a.mass * v : -a.mass * v;
  }
  return total;
}

std::pair<double, double> projection_range(const Window& w, Point n) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : w.segments) {
    double a = n.x * s.x0 + n.y * s.y, b = n.x * s.x1 + n.y * s.y;
    lo = std::min({lo, a, b});
    hi = std::max({hi, a, b});
  }
  for (const auto& a : w.atoms) {
    double v = n.x * a.x + n.y * a.y;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

double mean_projection(const Window& w, Point n) {
  double m = 0.0, first = 0.0;
  for (const auto& s : w.segments) {
    double len = s.x1 - s.x0;
    m += s.density * len;
    first += s.density * (n.x * 0.5 * (s.x1 + s.x0) * len + n.y * s.y * len);
  }
  for (const auto& a : w.atoms) {
    m += a.mass;
    first += a.mass * (n.x * a.x + n.y * a.y);
  }
  return first / m;
}

double smallest_weighted_median(const Window& w, Point n) {
  std::vector<std::pair<double, double>> v;
  double total = 0.0;
  for (const auto& a : w.atoms) {
    v.emplace_back(n.x * a.x + n.y * a.y, a.mass);
    total += a.mass;
  }
  std::sort(v.begin(), v.end());
  double cum = 0.0;
  for (const auto& [proj, mass] : v) {
    cum += mass;
    if (cum >= 0.5 * total) return proj;
  }
  return v.back().first;
}

}  // namespace

std::pair<double, double> best_offset(const Window& w, Point n, double p) {
  double c;
  if (p == 2.0) {
    c = mean_projection(w, n);
  } else if (p == 1.0 && w.segments.empty()) {
    c = smallest_weighted_median(w, n);
  } else {
    auto [lo, hi] = projection_range(w, n);
    double a = lo, b = hi;
    double fa = offset_slope(w, n, a, p), fb = offset_slope(w, n, b, p);
    if (fa <= 0.0) {
      c = a;
    } else if (fb >= 0.0) {
      c = b;
    } else {
      double tol = 1e-12 * std::max(hi - lo, std::numeric_limits<double>::min());
      int side = 0;
      c = 0.5 * (a + b);
      for (int it = 0; it < 200 && b - a > tol; ++it) {
        double x = (it % 4 == 3) ? 0.5 * (a + b) : (a * fb - b * fa) / (fb - fa);
        if (!(x > a && x < b)) x = 0.5 * (a + b);
        double fx = offset_slope(w, n, x, p);
        c = x;
        if (fx == 0.0) break;
        if (fx > 0.0) {
          a = x;
          fa = fx;
          if (side == 1) fb *= 0.5;
          side = 1;
        } else {
          b = x;
          fb = fx;
          if (side == -1) fa *= 0.5;
          side = -1;
        }
        c = 0.5 * (a + b);
      }
    }
  }
  return {c, window_objective(w, n, c, p)};
}

namespace {

bool single_height(const Window& w) {
  double y = w.segments.empty() ? w.atoms.front().y : w.segments.front().y;
  for (const auto& s : w.segments)
    if (s.y != y) return false;
  for (const auto& a : w.atoms)
    if (a.y != y) return false;
  return true;
}

double max_support_distance(const Window& w, Point n, double c) {
  double d = 0.0;
  for (const auto& s : w.segments)
    d = std::max({d, std::abs(n.x * s.x0 + n.y * s.y - c), std::abs(n.x * s.x1 + n.y * s.y - c)});
  for (const auto& a : w.atoms) d = std::max(d, std::abs(n.x * a.x + n.y * a.y - c));
  return d;
}

// Support within this distance of a line (in normalized units) is below the
// resolution of the coordinates themselves; such windows count as flat.
constexpr double kFlat = 1e-12;

bool collinear(const Window& w, const LineFit& fit) {
  return max_support_distance(w, fit.normal, fit.c) <= kFlat;
}

}  // namespace

LineFit fit_line_p2(const Window& w) {
  double m = w.mass();
  if (!(m > 0.0)) throw InvalidArgument("best line requires positive mass in the ball");
  double sx = 0.0, sy = 0.0;
  for (const auto& s : w.segments) {
    double len = s.x1 - s.x0;
    sx += s.density * 0.5 * (s.x1 + s.x0) * len;
    sy += s.density * s.y * len;
  }
  for (const auto& a : w.atoms) {
    sx += a.mass * a.x;
    sy += a.mass * a.y;
  }
  double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& s : w.segments) {
    double a = s.x0 - mx, b = s.x1 - mx, dy = s.y - my;
    sxx += s.density * (b * b * b - a * a * a) / 3.0;
    sxy += s.density * dy * (b * b - a * a) * 0.5;
    syy += s.density * dy * dy * (s.x1 - s.x0);
  }
  for (const auto& a : w.atoms) {
    double dx = a.x - mx, dy = a.y - my;
    sxx += a.mass * dx * dx;
    sxy += a.mass * dx * dy;
    syy += a.mass * dy * dy;
  }
  double half = 0.5 * (sxx - syy);
  double lmax = 0.5 * (sxx + syy) + std::sqrt(half * half + sxy * sxy);
  double lmin = lmax > 0.0 ? std::max(0.0, (sxx * syy - sxy * sxy) / lmax) : 0.0;
  Point v1{sxy, lmin - sxx}, v2{lmin - syy, sxy};
  double n1 = std::hypot(v1.x, v1.y), n2 = std::hypot(v2.x, v2.y);
  Point n{0.0, 1.0};
  if (n1 >= n2 && n1 > 0.0) n = {v1.x / n1, v1.y / n1};
  else if (n2 > 0.0) n = {v2.x / n2, v2.y / n2};
  if (n.y < 0.0 || (n.y == 0.0 && n.x < 0.0)) n = {-n.x, -n.y};
  LineFit fit;
  fit.normal = n;
  fit.c = n.x * mx + n.y * my;
  fit.objective = lmin;
  fit.evaluations = 1;
  if (collinear(w, fit)) fit.objective = 0.0;
  return fit;
}

LineFit fit_line_search(const Window& w, double p) {
  require(p >= 1.0, "p must be at least 1");
  if (!(w.mass() > 0.0)) throw InvalidArgument("best line requires positive mass in the ball");
  LineFit best;
  if (single_height(w)) {
    best.normal = {0.0, 1.0};
    best.c = w.segments.empty() ? w.atoms.front().y : w.segments.front().y;
    best.objective = window_objective(w, best.normal, best.c, p);
    best.evaluations = 1;
    return best;
  }
  LineFit l2 = fit_line_p2(w);
  if (collinear(w, l2)) {
    l2.objective = 0.0;
    return l2;
  }
  std::size_t evals = 0;
  bool have = false;
  auto consider = [&](Point n) {
    auto [c, f] = best_offset(w, n, p);
    ++evals;
    if (!have || f < best.objective) {
      best.normal = n;
      best.c = c;
      best.objective = f;
      have = true;
    }
    return f;
  };
  auto at = [&](double phi) { return consider(line_normal(phi)); };

  constexpr int grid = 180;
  const double step = std::numbers::pi / grid;
  std::vector<std::pair<double, int>> values;
  for (int i = 0; i < grid; ++i) values.emplace_back(at(i * step), i);
  at(std::numbers::pi / 2);
  consider(l2.normal);

  std::vector<double> centers;
  std::partial_sort(values.begin(), values.begin() + 3, values.end());
  for (int j = 0; j < 3; ++j) centers.push_back(values[j].second * step);
  centers.push_back(std::atan2(l2.normal.y, l2.normal.x));

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (double center : centers) {
    double a = center - step, b = center + step;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = at(x1), f2 = at(x2);
    while (b - a > 1e-8) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = at(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = at(x2);
      }
    }
  }
  best.evaluations = evals;
  return best;
}

namespace {

Line to_original(const LineFit& fit, const Ball& ball) {
  Point x0 = ball.center_d();
  double r = ball.radius_d();
  return Line::from_normal(fit.normal.x, fit.normal.y, r * fit.c + fit.normal.x * x0.x + fit.normal.y * x0.y);
}

}  // namespace

BetaPair beta_pair(const Measure& mu, const Ball& ball, double p) {
  require(p >= 1.0 && std::isfinite(p), "p must be at least 1");
  Window w = mu.window(ball);
  BetaPair out;
  out.pieces = w.pieces();
  out.touched = w.touched;
  double m = w.mass();
  out.ball_mass = m * ball.radius_d();
  if (!(m > 0.0)) {
    out.beta = 0.0;
    out.beta_tilde = std::numeric_limits<double>::quiet_NaN();
    out.best_line = Line::horizontal(ball.center_d().y);
    return out;
  }
  LineFit fit = p == 2.0 ? fit_line_p2(w) : fit_line_search(w, p);
  double obj = std::max(0.0, fit.objective);
  out.beta = std::pow(obj, 1.0 / p);
  out.beta_tilde = std::pow(obj / m, 1.0 / p);
  out.best_line = to_original(fit, ball);
  out.iterations = fit.evaluations;
  return out;
}

BetaResult beta(const Measure& mu, const Ball& ball, double p, BetaVariant variant) {
  BetaPair pair = beta_pair(mu, ball, p);
  if (variant == BetaVariant::beta_tilde && !(pair.ball_mass > 0.0))
    throw InvalidArgument("beta_tilde is undefined on a ball of zero mass");
  BetaResult r;
  r.value = variant == BetaVariant::beta ? pair.beta : pair.beta_tilde;
  r.best_line = pair.best_line;
  r.variant = variant;
  r.p = p;
  r.ball_mass = pair.ball_mass;
  r.pieces = pair.pieces;
  r.touched = pair.touched;
  r.iterations = pair.iterations;
  return r;
}

BetaResult beta(const Measure& mu, const RationalPoint& x, const Rational& r, double p, BetaVariant variant) {
  return beta(mu, Ball(x, r), p, variant);
}

Line best_line_p2(const Measure& mu, const Ball& ball) { return to_original(fit_line_p2(mu.window(ball)), ball); }

Line best_line_search(const Measure& mu, const Ball& ball, double p) {
  return to_original(fit_line_search(mu.window(ball), p), ball);
}

void ScaleGrid::validate() const {
  require(std::isfinite(r_min) && std::isfinite(r_max) && r_min > 0 && r_min < r_max,
          "scale grid needs 0 < r_min < r_max");
  require(lambda > 0 && lambda < 1, "scale grid ratio must lie in (0, 1)");
  require(std::log(r_min / r_max) / std::log(lambda) < 1e7, "scale grid has too many points");
}

std::vector<double> ScaleGrid::radii() const {
  validate();
  std::vector<double> out;
  for (int m = 0;; ++m) {
    double r = r_max * std::pow(lambda, m);
    if (r < r_min * (1 - 1e-12)) break;
    out.push_back(r);
  }
  return out;
}

double ScaleGrid::weight() const { return -std::log(lambda); }

std::vector<ScaleSample> scale_samples(const Measure& mu, const RationalPoint& x, const std::vector<double>& radii,
                                       double p, unsigned threads) {
  return parallel_map<ScaleSample>(
      radii.size(),
      [&](std::size_t i) {
        return ScaleSample{radii[i], beta_pair(mu, Ball(x, rational_from_double(radii[i])), p)};
      },
      threads);
}

SquareFunction square_function(const std::vector<ScaleSample>& samples, double weight, BetaVariant variant) {
  SquareFunction sf;
  for (const auto& s : samples) {
    ++sf.scales;
    double v = variant == BetaVariant::beta ? s.value.beta : s.value.beta_tilde;
    if (std::isnan(v)) {
      ++sf.empty_scales;
      continue;
    }
    sf.value += v * v * weight;
  }
  return sf;
}

SquareFunction square_function(const Measure& mu, const RationalPoint& x, double p, const ScaleGrid& grid,
                               BetaVariant variant, unsigned threads) {
  return square_function(scale_samples(mu, x, grid.radii(), p, threads), grid.weight(), variant);
}

double beta_lower_bound_probe(const Measure& mu_j, const RationalPoint& x, int k, double p, const Schedule& s,
                              int samples) {
  require(samples >= 2, "probe needs at least two radii");
  double h = s.h_d(k);
  std::vector<double> radii;
  for (int i = 0; i < samples; ++i) radii.push_back(2.0 * h * std::pow(2.0, double(i) / (samples - 1)));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& sample : scale_samples(mu_j, x, radii, p)) best = std::min(best, sample.value.beta);
  return best;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_beta_csv_header(std::ostream& out) { out << "x,y,r,p,variant,beta,phi,c,ball_mass\n"; }

void write_beta_csv_row(std::ostream& out, const BetaRow& row) {
  out << num(row.x.x) << ',' << num(row.x.y) << ',' << num(row.r) << ',' << num(row.p) << ','
      << to_string(row.variant) << ',' << num(row.value) << ',' << num(row.line.phi) << ',' << num(row.line.c)
      << ',' << num(row.ball_mass) << '\n';
}

}  // namespace betacantor
