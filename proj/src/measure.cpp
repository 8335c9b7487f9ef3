#include "betacantor/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "betacantor/error.hpp"
#include "betacantor/moments.hpp"

namespace betacantor {

Ball::Ball(RationalPoint c, Rational r) : center(std::move(c)), radius(std::move(r)) {
  require(sgn(radius) > 0, "ball radius must be positive");
}

Ball Ball::from_doubles(Point c, double r) {
  require(std::isfinite(r) && r > 0, "ball radius must be positive and finite");
  return Ball(to_rational(c), rational_from_double(r));
}

bool Ball::contains(const RationalPoint& p) const {
  Rational dx = p.x - center.x;
  Rational dy = p.y - center.y;
  return dx * dx + dy * dy <= radius * radius;
}

Line Line::from_normal(double nx, double ny, double c) {
  double norm = std::hypot(nx, ny);
  require(norm > 0 && std::isfinite(norm), "line normal must be nonzero");
  if (nx == 0.0) return {std::numbers::pi / 2, ny > 0 ? c / norm : -c / norm};
  if (ny == 0.0) return {0.0, nx > 0 ? c / norm : -c / norm};
  double phi = std::atan2(ny, nx);
  c /= norm;
  if (phi < 0) {
    phi += std::numbers::pi;
    c = -c;
  }
  if (phi >= std::numbers::pi) {
    phi -= std::numbers::pi;
    c = -c;
  }
  return {phi, c};
}

WeightedSegment::WeightedSegment(RationalPoint l, RationalPoint r, Rational d)
    : left(std::move(l)), right(std::move(r)), density(std::move(d)) {
  require(left.y == right.y, "segments must be horizontal");
  require(left.x < right.x, "segment endpoints must satisfy left.x < right.x");
  require(sgn(density) >= 0, "segment density must be nonnegative");
}

double Window::mass() const {
  double m = 0.0;
  for (const auto& s : segments) m += s.density * (s.x1 - s.x0);
  for (const auto& a : atoms) m += a.mass;
  return m;
}

double Measure::ball_mass(const Ball& ball) const { return window(ball).mass() * ball.radius_d(); }

double ball_mass(const Measure& mu, const Ball& ball) { return mu.ball_mass(ball); }

std::optional<SegmentClip> clip_segment_to_ball(const WeightedSegment& seg, const Ball& ball) {
  Rational dy = seg.y() - ball.center.y;
  Rational disc = ball.radius * ball.radius - dy * dy;
  if (sgn(disc) < 0) return std::nullopt;
  SegmentClip clip;
  Rational half;
  if (auto s = exact_sqrt(disc)) {
    half = *s;
  } else {
    clip.exact = false;
    double sd = std::sqrt(to_double(disc));
    half = rational_from_double(sd);
    while (half * half > disc) {
      sd = std::nextafter(sd, 0.0);
      half = rational_from_double(sd);
    }
  }
  Rational lo = ball.center.x - half;
  Rational hi = ball.center.x + half;
  clip.x0 = std::max(seg.left.x, lo);
  clip.x1 = std::min(seg.right.x, hi);
  if (clip.x0 > clip.x1) return std::nullopt;
  return clip;
}

SegmentMeasure::SegmentMeasure(std::vector<WeightedSegment> segments, std::optional<int> generation)
    : segments_(std::move(segments)), generation_(generation) {}

Rational SegmentMeasure::exact_total_mass() const {
  Rational m = 0;
  for (const auto& s : segments_) m += s.mass();
  return m;
}

Window SegmentMeasure::window(const Ball& ball) const {
  Window w;
  double cx = to_double(ball.center.x), cy = to_double(ball.center.y);
  double r = ball.radius_d();
  double slack = 1e-9 * r;
  for (const auto& s : segments_) {
    ++w.touched;
    double y = to_double(s.y());
    if (std::abs(y - cy) > r + slack) continue;
    if (to_double(s.left.x) > cx + r + slack || to_double(s.right.x) < cx - r - slack) continue;
    auto clip = clip_segment_to_ball(s, ball);
    if (!clip || clip->x0 == clip->x1 || sgn(s.density) == 0) continue;
    w.segments.push_back({to_double((clip->x0 - ball.center.x) / ball.radius),
                          to_double((clip->x1 - ball.center.x) / ball.radius),
                          to_double((s.y() - ball.center.y) / ball.radius), to_double(s.density)});
  }
  return w;
}

double SegmentMeasure::ball_mass(const Ball& ball) const {
  double cx = to_double(ball.center.x), cy = to_double(ball.center.y);
  double r = ball.radius_d();
  double slack = 1e-9 * r;
  double m = 0.0;
  for (const auto& s : segments_) {
    if (std::abs(to_double(s.y()) - cy) > r + slack) continue;
    if (to_double(s.left.x) > cx + r + slack || to_double(s.right.x) < cx - r - slack) continue;
    if (auto clip = clip_segment_to_ball(s, ball)) m += to_double(s.density * (clip->x1 - clip->x0));
  }
  return m;
}

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  by_x_.resize(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    require(std::isfinite(a.position.x) && std::isfinite(a.position.y), "atom position must be finite");
    require(std::isfinite(a.mass) && a.mass >= 0, "atom mass must be finite and nonnegative");
    by_x_[i] = i;
    total_ += a.mass;
  }
  std::sort(by_x_.begin(), by_x_.end(), [&](std::size_t i, std::size_t j) {
    return atoms_[i].position.x < atoms_[j].position.x;
  });
  for (std::size_t k = 0; k < by_x_.size(); ++k) {
    const Atom& a = atoms_[by_x_[k]];
    y_lo_ = std::min(y_lo_, a.position.y);
    y_hi_ = std::max(y_hi_, a.position.y);
    if (k % kBlock == 0) block_mass_.push_back(0.0);
    block_mass_.back() += a.mass;
  }
}

std::vector<std::size_t> AtomicMeasure::members(Point c, double r) const {
  std::vector<std::size_t> out;
  auto lo = std::lower_bound(by_x_.begin(), by_x_.end(), c.x - r,
                             [&](std::size_t i, double v) { return atoms_[i].position.x < v; });
  double r2 = r * r;
  for (auto it = lo; it != by_x_.end() && atoms_[*it].position.x <= c.x + r; ++it) {
    const Point& p = atoms_[*it].position;
    double dx = p.x - c.x, dy = p.y - c.y;
    if (dx * dx + dy * dy <= r2) out.push_back(*it);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Window AtomicMeasure::window(const Ball& ball) const {
  Window w;
  Point c = ball.center_d();
  double r = ball.radius_d();
  for (std::size_t i : members(c, r)) {
    const Atom& a = atoms_[i];
    ++w.touched;
    if (a.mass == 0.0) continue;
    w.atoms.push_back({(a.position.x - c.x) / r, (a.position.y - c.y) / r, a.mass / r});
  }
  return w;
}

double AtomicMeasure::mass_within(Point c, double r) const {
  auto x_at = [&](std::size_t i, double v) { return atoms_[i].position.x < v; };
  std::size_t lo = std::lower_bound(by_x_.begin(), by_x_.end(), c.x - r, x_at) - by_x_.begin();
  double r2 = r * r, m = 0.0;
  auto edge = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k) {
      const Atom& a = atoms_[by_x_[k]];
      if (a.position.x > c.x + r) break;
      double dx = a.position.x - c.x, dy = a.position.y - c.y;
      if (dx * dx + dy * dy <= r2) m += a.mass;
    }
  };
  // Atoms with |x - c.x| <= w lie inside the ball whatever their height,
  // with a margin far above rounding, so their mass comes from block sums.
  double d = std::max(std::abs(y_hi_ - c.y), std::abs(y_lo_ - c.y));
  double w2 = r2 - d * d - 1e-12 * r2;
  if (!(w2 > 0) || by_x_.size() < 4 * kBlock) {
    edge(lo, by_x_.size());
    return m;
  }
  double w = std::sqrt(w2);
  std::size_t a = std::lower_bound(by_x_.begin() + lo, by_x_.end(), c.x - w, x_at) - by_x_.begin();
  std::size_t b = std::upper_bound(by_x_.begin() + a, by_x_.end(), c.x + w,
                                   [&](double v, std::size_t i) { return v < atoms_[i].position.x; }) -
                  by_x_.begin();
  edge(lo, a);
  std::size_t k = a;
  for (; k < b && k % kBlock != 0; ++k) m += atoms_[by_x_[k]].mass;
  for (; k + kBlock <= b; k += kBlock) m += block_mass_[k / kBlock];
  for (; k < b; ++k) m += atoms_[by_x_[k]].mass;
  edge(b, by_x_.size());
  return m;
}

double AtomicMeasure::ball_mass(const Ball& ball) const { return mass_within(ball.center_d(), ball.radius_d()); }

Window SumMeasure::window(const Ball& ball) const {
  Window w;
  for (const Measure* part : parts_) {
    Window pw = part->window(ball);
    w.segments.insert(w.segments.end(), pw.segments.begin(), pw.segments.end());
    w.atoms.insert(w.atoms.end(), pw.atoms.begin(), pw.atoms.end());
    w.touched += pw.touched;
  }
  return w;
}

double SumMeasure::total_mass() const {
  double m = 0.0;
  for (const Measure* part : parts_) m += part->total_mass();
  return m;
}

double segment_line_p_moment(const WeightedSegment& seg, const Ball& clip, const Line& line, double p) {
  require(p >= 1.0, "p must be at least 1");
  auto c = clip_segment_to_ball(seg, clip);
  if (!c) return 0.0;
  Point n = line_normal(line.phi);
  double y = to_double(seg.y());
  return to_double(seg.density) *
         segment_moment(n.x, y * n.y - line.c, to_double(c->x0), to_double(c->x1), p);
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double point_set_diam(std::vector<Point> pts) {
  if (pts.size() < 2) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  if (hull.size() < 2) hull = {pts.front(), pts.back()};
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, distance(hull[i], hull[j]));
  return best;
}

}  // namespace

double diam(const std::vector<WeightedSegment>& segments) {
  std::vector<Point> pts;
  for (const auto& s : segments) {
    pts.push_back(to_point(s.left));
    pts.push_back(to_point(s.right));
  }
  return point_set_diam(std::move(pts));
}

double diam(const std::vector<Atom>& atoms) {
  std::vector<Point> pts;
  for (const auto& a : atoms) pts.push_back(a.position);
  return point_set_diam(std::move(pts));
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_measure(std::ostream& out, const SegmentMeasure& mu) {
  for (const auto& s : mu.segments())
    out << "S " << format_rational(s.left.x) << ' ' << format_rational(s.left.y) << ' '
        << format_rational(s.right.x) << ' ' << format_rational(s.right.y) << ' '
        << format_rational(s.density) << '\n';
}

void write_measure(std::ostream& out, const AtomicMeasure& mu) {
  for (const auto& a : mu.atoms())
    out << "A " << format_double(a.position.x) << ' ' << format_double(a.position.y) << ' '
        << format_double(a.mass) << '\n';
}

MeasureFile read_measure(std::istream& in) {
  MeasureFile file;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag)) continue;
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    auto where = " on line " + std::to_string(lineno);
    try {
      if (tag == "S") {
        require(tok.size() == 5, "segment record needs 5 fields" + where);
        file.segments.emplace_back(RationalPoint{parse_rational(tok[0]), parse_rational(tok[1])},
                                   RationalPoint{parse_rational(tok[2]), parse_rational(tok[3])},
                                   parse_rational(tok[4]));
      } else if (tag == "A") {
        require(tok.size() == 3, "atom record needs 3 fields" + where);
        file.atoms.push_back({{to_double(parse_rational(tok[0])), to_double(parse_rational(tok[1]))},
                              to_double(parse_rational(tok[2]))});
      } else {
        throw InvalidArgument("unknown record '" + tag + "'" + where);
      }
    } catch (const InvalidArgument& e) {
      std::string msg = e.what();
      if (msg.find(" on line ") == std::string::npos) msg += where;
      throw InvalidArgument(msg);
    }
  }
  return file;
}

}  // namespace betacantor
