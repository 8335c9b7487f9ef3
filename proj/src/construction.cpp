#include "betacantor/construction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "betacantor/error.hpp"

namespace betacantor {

WeightedSegment SegmentGeometry::to_segment() const {
  return WeightedSegment({x0, y}, {x0 + length, y}, Rational(1));
}

std::vector<WeightedSegment> children(const WeightedSegment& parent, const Rational& h, const Rational& a,
                                      const Integer& n) {
  require(sgn(a) > 0 && a <= 1, "children: a must lie in (0, 1]");
  require(n >= 2, "children: n must be at least 2");
  require(sgn(h) >= 0, "children: h must be nonnegative");
  Rational len = parent.length();
  Rational w = a * len / Rational(n);
  Rational gap = (1 - a) * len / Rational(n - 1);
  Rational y = parent.y() + h;
  std::vector<WeightedSegment> out;
  out.reserve(n.get_ui());
  for (Integer i = 0; i < n; ++i) {
    Rational x0 = parent.left.x + Rational(i) * (w + gap);
    out.emplace_back(RationalPoint{x0, y}, RationalPoint{x0 + w, y}, parent.density);
  }
  return out;
}

void check_disjoint(const std::vector<WeightedSegment>& segments) {
  std::vector<const WeightedSegment*> order;
  order.reserve(segments.size());
  for (const auto& s : segments) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const WeightedSegment* a, const WeightedSegment* b) {
    int c = cmp(a->y(), b->y());
    return c < 0 || (c == 0 && a->left.x < b->left.x);
  });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i]->y() == order[i - 1]->y() && !(order[i - 1]->right.x < order[i]->left.x))
      throw InvariantViolation("overlapping segments at height " + format_rational(order[i]->y()) +
                               "; h is too large for this schedule");
}

std::vector<WeightedSegment> refine(const std::vector<WeightedSegment>& parent, int k, const Schedule& s,
                                    std::size_t budget) {
  require(k >= 0, "refine: generation must be nonnegative");
  const Rational& a = s.a_at(k + 1);
  const Rational& h = s.h_at(k + 1);
  const Integer& n = s.n_at(k + 1);
  Integer count = Integer(2) * n * Integer(static_cast<unsigned long>(parent.size()));
  if (count > Integer(static_cast<unsigned long>(budget)))
    throw ResourceExhausted("generation " + std::to_string(k + 1) + " has " + count.get_str() +
                            " segments, over the enumeration budget");
  std::vector<WeightedSegment> out;
  out.reserve(count.get_ui());
  for (const auto& p : parent) {
    auto down = children(p, 0, 1 - a, n);
    auto up = children(p, h, a, n);
    out.insert(out.end(), down.begin(), down.end());
    out.insert(out.end(), up.begin(), up.end());
  }
  check_disjoint(out);
  return out;
}

SegmentMeasure enumerate_generation(const Schedule& s, int k, std::size_t budget) {
  require(k >= 0, "generation must be nonnegative");
  std::vector<WeightedSegment> segs{WeightedSegment({0, 0}, {1, 0}, 1)};
  for (int g = 0; g < k; ++g) segs = refine(segs, g, s, budget);
  return SegmentMeasure(std::move(segs), k);
}

namespace {

// Width and period of the children of a generation l-1 segment, as
// fractions of its length.
struct FamilyShape {
  Rational width;
  Rational period;
};

FamilyShape family_shape(const Schedule& s, int l, Branch b) {
  const Rational& a = s.a_at(l);
  Rational n(s.n_at(l));
  Rational share = b == Branch::down ? Rational(1 - a) : a;
  Rational w = share / n;
  return {w, w + (1 - share) / (n - 1)};
}

SegmentGeometry child_geometry(const Schedule& s, const SegmentGeometry& g, const AddressStep& step) {
  int l = g.generation + 1;
  require(sgn(step.child) >= 0 && step.child < s.n_at(l), "address child index out of range");
  FamilyShape f = family_shape(s, l, step.branch);
  SegmentGeometry c;
  c.x0 = g.x0 + Rational(step.child) * f.period * g.length;
  c.length = f.width * g.length;
  c.y = step.branch == Branch::up ? Rational(g.y + s.h_at(l)) : g.y;
  c.generation = l;
  return c;
}

SegmentGeometry root_geometry() { return {Rational(0), Rational(1), Rational(0), 0}; }

Rational span_to(const Schedule& s, int g, int k) {
  Rational t = 0;
  for (int l = g + 1; l <= k; ++l) t += s.h_at(l);
  return t;
}

bool box_meets_ball(const Rational& x0, const Rational& x1, const Rational& y0, const Rational& y1,
                    const Ball& ball) {
  const Rational& cx = ball.center.x;
  const Rational& cy = ball.center.y;
  Rational dx = 0, dy = 0;
  if (cx < x0) dx = x0 - cx;
  else if (cx > x1) dx = cx - x1;
  if (cy < y0) dy = y0 - cy;
  else if (cy > y1) dy = cy - y1;
  return dx * dx + dy * dy <= ball.radius * ball.radius;
}

Integer random_below(const Integer& n, std::mt19937_64& rng) {
  std::size_t words = mpz_sizeinbase(n.get_mpz_t(), 2) / 64 + 2;
  Integer v = 0;
  for (std::size_t i = 0; i < words; ++i) {
    v <<= 64;
    std::uint64_t w = rng();
    v += Integer(static_cast<unsigned long>(w));
  }
  Integer r;
  mpz_mod(r.get_mpz_t(), v.get_mpz_t(), n.get_mpz_t());
  return r;
}

Rational random_fraction(std::mt19937_64& rng) {
  std::uint64_t m = rng() >> 11;
  return make_rational(Integer(static_cast<unsigned long>(m)), Integer(1UL << 53));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

SegmentGeometry segment_geometry(const Schedule& s, const SegmentAddress& address) {
  SegmentGeometry g = root_geometry();
  for (const auto& step : address.path) g = child_geometry(s, g, step);
  return g;
}

RationalPoint point_of(const Schedule& s, const PointAddress& x) {
  SegmentGeometry g = segment_geometry(s, x.segment);
  require(sgn(x.offset) >= 0 && x.offset <= g.length, "point offset outside its segment");
  return {g.x0 + x.offset, g.y};
}

std::vector<AddressedSegment> window_segments(const Ball& window, int k, const Schedule& s,
                                              std::size_t budget) {
  require(k >= 0, "generation must be nonnegative");
  if (k > 0) s.a_at(k);
  std::vector<AddressedSegment> out;
  std::vector<Rational> span(k + 1);
  for (int g = 0; g <= k; ++g) span[g] = span_to(s, g, k);
  Rational xlo = window.center.x - window.radius;
  Rational xhi = window.center.x + window.radius;
  std::size_t work = 0;
  SegmentAddress addr;
  auto descend = [&](auto&& self, const SegmentGeometry& g) -> void {
    if (++work > budget) throw ResourceExhausted("window enumeration exceeded its budget");
    if (!box_meets_ball(g.x0, g.x0 + g.length, g.y, g.y + span[g.generation], window)) return;
    if (g.generation == k) {
      out.push_back({addr, g});
      return;
    }
    int l = g.generation + 1;
    for (Branch b : {Branch::down, Branch::up}) {
      FamilyShape f = family_shape(s, l, b);
      Rational w = f.width * g.length;
      Rational period = f.period * g.length;
      Integer lo = ceil_of((xlo - g.x0 - w) / period);
      Integer hi = floor_of((xhi - g.x0) / period);
      if (lo < 0) lo = 0;
      if (hi > s.n_at(l) - 1) hi = s.n_at(l) - 1;
      if (lo > hi) continue;
      if (hi - lo + 1 > Integer(static_cast<unsigned long>(budget)))
        throw ResourceExhausted("window enumeration exceeded its budget");
      for (Integer i = lo; i <= hi; ++i) {
        addr.path.push_back({i, b});
        self(self, child_geometry(s, g, addr.path.back()));
        addr.path.pop_back();
      }
    }
  };
  descend(descend, root_geometry());
  return out;
}

SegmentMeasure window_refine(const Ball& window, int k, const Schedule& s, std::size_t budget) {
  std::vector<WeightedSegment> segs;
  for (const auto& a : window_segments(window, k, s, budget)) segs.push_back(a.geometry.to_segment());
  return SegmentMeasure(std::move(segs), k);
}

PointAddress transport(const Schedule& s, const PointAddress& x) {
  int k = x.segment.depth();
  SegmentGeometry g = segment_geometry(s, x.segment);
  require(sgn(x.offset) >= 0 && x.offset <= g.length, "transport: point is not on its segment");
  const Rational& a = s.a_at(k + 1);
  const Integer& n = s.n_at(k + 1);
  Rational piece = g.length / Rational(n);
  Integer i = floor_of(x.offset / piece);
  if (i >= n) i = n - 1;
  Rational rest = x.offset - Rational(i) * piece;
  Rational left_part = (1 - a) * piece;
  PointAddress out;
  out.segment = x.segment;
  if (rest <= left_part) {
    out.segment.path.push_back({i, Branch::down});
    out.offset = rest;
  } else {
    out.segment.path.push_back({i, Branch::up});
    out.offset = rest - left_part;
  }
  return out;
}

TransportPreimage transport_preimage(const Schedule& s, const SegmentAddress& child) {
  require(child.depth() >= 1, "transport_preimage: the root has no parent");
  TransportPreimage pre;
  pre.parent.path.assign(child.path.begin(), child.path.end() - 1);
  const AddressStep& step = child.path.back();
  int l = child.depth();
  SegmentGeometry g = segment_geometry(s, pre.parent);
  const Rational& a = s.a_at(l);
  const Integer& n = s.n_at(l);
  require(sgn(step.child) >= 0 && step.child < n, "address child index out of range");
  Rational piece = g.length / Rational(n);
  Rational start = Rational(step.child) * piece;
  if (step.branch == Branch::down) {
    pre.t0 = start;
    pre.t1 = start + (1 - a) * piece;
  } else {
    pre.t0 = start + (1 - a) * piece;
    pre.t1 = start + piece;
    pre.left_closed = false;
    // The shared boundary with the next piece goes to that piece.
    pre.right_closed = step.child == n - 1;
  }
  return pre;
}

std::optional<PointAddress> locate(const Schedule& s, const RationalPoint& p, int k) {
  require(k >= 0, "generation must be nonnegative");
  SegmentGeometry g = root_geometry();
  PointAddress out;
  for (int l = 1; l <= k; ++l) {
    Rational dy = p.y - g.y;
    if (sgn(dy) < 0) return std::nullopt;
    Branch b = dy >= s.h_at(l) ? Branch::up : Branch::down;
    FamilyShape f = family_shape(s, l, b);
    Rational t = p.x - g.x0;
    if (sgn(t) < 0 || t > g.length) return std::nullopt;
    Integer i = floor_of(t / (f.period * g.length));
    if (i >= s.n_at(l)) return std::nullopt;
    if (t - Rational(i) * f.period * g.length > f.width * g.length) return std::nullopt;
    out.segment.path.push_back({i, b});
    g = child_geometry(s, g, out.segment.path.back());
  }
  if (p.y != g.y || p.x < g.x0 || p.x > g.x0 + g.length) return std::nullopt;
  out.offset = p.x - g.x0;
  return out;
}

Side classify(const PointAddress& x, int k) {
  require(k >= 1, "classify: generation must be at least 1");
  require(k <= x.segment.depth(), "classify: address is shallower than the requested generation");
  return x.segment.path[k - 1].branch == Branch::up ? Side::up : Side::down;
}

namespace {

PointAddress sample_impl(const Schedule& s, int depth, int k_lo, int k_hi, Branch forced, std::mt19937_64& rng) {
  require(depth >= 0, "sample depth must be nonnegative");
  PointAddress x;
  SegmentGeometry g = root_geometry();
  for (int l = 1; l <= depth; ++l) {
    Branch b = uniform01(rng) < s.a_d(l) ? Branch::up : Branch::down;
    if (l >= k_lo && l <= k_hi) b = forced;
    x.segment.path.push_back({random_below(s.n_at(l), rng), b});
    g = child_geometry(s, g, x.segment.path.back());
  }
  x.offset = g.length * random_fraction(rng);
  return x;
}

}  // namespace

PointAddress sample_point(const Schedule& s, int depth, std::mt19937_64& rng) {
  return sample_impl(s, depth, 0, -1, Branch::down, rng);
}

PointAddress sample_point_with_branch(const Schedule& s, int depth, int k, Branch branch,
                                      std::mt19937_64& rng) {
  require(k >= 1 && k <= depth, "forced generation out of range");
  return sample_impl(s, depth, k, k, branch, rng);
}

PointAddress sample_point_with_branches(const Schedule& s, int depth, int k_lo, int k_hi, Branch branch,
                                        std::mt19937_64& rng) {
  require(1 <= k_lo && k_lo <= k_hi && k_hi <= depth, "forced generations out of range");
  return sample_impl(s, depth, k_lo, k_hi, branch, rng);
}

PointAddress nearest_parent_point(const Schedule& s, const PointAddress& x) {
  require(x.segment.depth() >= 1, "nearest_parent_point needs a point of generation at least 1");
  SegmentGeometry child = segment_geometry(s, x.segment);
  PointAddress out;
  out.segment.path.assign(x.segment.path.begin(), x.segment.path.end() - 1);
  SegmentGeometry parent = segment_geometry(s, out.segment);
  out.offset = child.x0 + x.offset - parent.x0;
  return out;
}

GenerationStats generation_stats(const Schedule& s, int k) {
  require(k >= 0, "generation must be nonnegative");
  GenerationStats st;
  st.count = 0;
  st.total_mass = 0;
  bool first = true;
  auto walk = [&](auto&& self, int l, const Integer& count, const Rational& len) -> void {
    if (l > k) {
      st.count += count;
      st.total_mass += Rational(count) * len;
      if (first || len < st.min_length) st.min_length = len;
      if (first || len > st.max_length) st.max_length = len;
      first = false;
      return;
    }
    for (Branch b : {Branch::down, Branch::up})
      self(self, l + 1, count * s.n_at(l), len * family_shape(s, l, b).width);
  };
  walk(walk, 1, Integer(1), Rational(1));
  return st;
}

Rational separation_squared(const std::vector<WeightedSegment>& segments) {
  if (segments.size() < 2) return 0;
  std::map<Rational, std::vector<const WeightedSegment*>> lines;
  for (const auto& s : segments) lines[s.y()].push_back(&s);
  for (auto& [y, v] : lines)
    std::sort(v.begin(), v.end(),
              [](const WeightedSegment* a, const WeightedSegment* b) { return a->left.x < b->left.x; });
  std::vector<const std::vector<const WeightedSegment*>*> order;
  std::vector<Rational> heights;
  for (const auto& [y, v] : lines) {
    heights.push_back(y);
    order.push_back(&v);
  }
  auto gap = [](const WeightedSegment* a, const Rational& x0, const Rational& x1) -> Rational {
    if (a->right.x < x0) return x0 - a->right.x;
    if (a->left.x > x1) return a->left.x - x1;
    return 0;
  };
  Rational worst = 0;
  for (std::size_t li = 0; li < order.size(); ++li) {
    const auto& line = *order[li];
    for (std::size_t i = 0; i < line.size(); ++i) {
      const WeightedSegment* s = line[i];
      std::optional<Rational> best;
      auto offer = [&](const Rational& d2) {
        if (!best || d2 < *best) best = d2;
      };
      if (i > 0) {
        Rational g = s->left.x - line[i - 1]->right.x;
        offer(g * g);
      }
      if (i + 1 < line.size()) {
        Rational g = line[i + 1]->left.x - s->right.x;
        offer(g * g);
      }
      for (std::size_t step = 1; step < order.size(); ++step) {
        bool any = false;
        for (std::size_t lj : {li + step, li - step}) {
          if (lj >= order.size()) continue;
          Rational dy = heights[lj] - heights[li];
          Rational dy2 = dy * dy;
          if (best && dy2 >= *best) continue;
          any = true;
          const auto& other = *order[lj];
          auto it = std::upper_bound(other.begin(), other.end(), s->right.x,
                                     [](const Rational& v, const WeightedSegment* o) { return v < o->left.x; });
          if (it != other.end()) {
            Rational g = gap(*it, s->left.x, s->right.x);
            offer(dy2 + g * g);
          }
          if (it != other.begin()) {
            Rational g = gap(*(it - 1), s->left.x, s->right.x);
            offer(dy2 + g * g);
          }
        }
        if (!any) break;
      }
      if (best && *best > worst) worst = *best;
    }
  }
  return worst;
}

ConstructionMeasure::ConstructionMeasure(Schedule s, int generation, ConstructionOptions options)
    : schedule_(std::move(s)), generation_(generation), options_(options) {
  require(generation_ >= 0, "generation must be nonnegative");
  require(options_.merge_tolerance >= 0 && options_.merge_tolerance < 1, "merge tolerance must lie in [0, 1)");
  if (generation_ > 0) schedule_.a_at(generation_);
  down_.resize(generation_ + 1);
  up_.resize(generation_ + 1);
  for (int l = 1; l <= generation_; ++l) {
    FamilyShape d = family_shape(schedule_, l, Branch::down);
    FamilyShape u = family_shape(schedule_, l, Branch::up);
    down_[l] = {d.width, d.period};
    up_[l] = {u.width, u.period};
  }
  span_.resize(generation_ + 1);
  for (int g = 0; g <= generation_; ++g) span_[g] = span_to(schedule_, g, generation_);
  offsets_.resize(generation_ + 1);
  offsets_[generation_] = {{Rational(0), Rational(1), 1.0, 1.0 / 12}};
  for (int g = generation_ - 1; g >= 0; --g) {
    const Rational& a = schedule_.a_at(g + 1);
    const Rational& h = schedule_.h_at(g + 1);
    Rational n(schedule_.n_at(g + 1));
    for (Branch b : {Branch::down, Branch::up}) {
      const Family& f = b == Branch::down ? down_[g + 1] : up_[g + 1];
      Rational share = b == Branch::down ? Rational(1 - a) : a;
      // Variance of equally spaced children plus the scaled variance inside one.
      double between = to_double(f.period * f.period * (n * n - 1)) / 12;
      double w2 = to_double(f.width * f.width);
      for (const auto& o : offsets_[g + 1]) {
        Rational w = share * o.weight;
        Rational dy = b == Branch::down ? o.dy : Rational(h + o.dy);
        offsets_[g].push_back({dy, w, to_double(w), between + w2 * o.variance});
      }
    }
  }
  mean_dy_.resize(generation_ + 1);
  for (int g = 0; g <= generation_; ++g) {
    Rational m = 0;
    for (const auto& o : offsets_[g]) m += o.dy * o.weight;
    mean_dy_[g] = to_double(m);
  }
}

std::vector<Atom> ConstructionMeasure::coarse_atoms(double spacing, std::size_t budget) const {
  require(spacing > 0, "atom spacing must be positive");
  std::vector<Atom> out;
  auto push = [&](Atom a) {
    if (out.size() >= budget) throw ResourceExhausted("atomization exceeded its budget");
    out.push_back(a);
  };
  // Every segment of every generation has unit density, so mass = length.
  auto visit = [&](auto&& self, const Rational& x0, const Rational& len, const Rational& y, int g) -> void {
    double l = to_double(len);
    if (std::hypot(l, to_double(span_[g])) < spacing) {
      push({{to_double(x0 + len / 2), to_double(y) + mean_dy_[g]}, l});
      return;
    }
    int k = g + 1;
    // Children too fine to resolve: spread the node's mass evenly along it,
    // at each descendant height (or at the mean height when those are closer
    // together than the spacing).
    if (g == generation_ || to_double(std::max(down_[k].period, up_[k].period) * len) < spacing) {
      double count = std::floor(l / spacing) + 1;
      bool flat = to_double(span_[g]) < spacing;
      std::size_t heights = flat ? 1 : offsets_[g].size();
      if (count * double(heights) > double(budget)) throw ResourceExhausted("atomization exceeded its budget");
      auto c = static_cast<long>(count);
      double yd = to_double(y);
      for (long i = 0; i < c; ++i) {
        double x = to_double(x0 + len * Rational(2 * i + 1) / Rational(2 * c));
        if (flat) {
          push({{x, yd + mean_dy_[g]}, l / double(c)});
          continue;
        }
        for (const auto& o : offsets_[g]) push({{x, to_double(y + o.dy)}, l * o.weight_d / double(c)});
      }
      return;
    }
    const Integer& n = schedule_.n_at(k);
    if (2 * n > Integer(static_cast<unsigned long>(budget))) throw ResourceExhausted("atomization exceeded its budget");
    for (Integer i = 0; i < n; ++i) self(self, x0 + Rational(i) * down_[k].period * len, down_[k].width * len, y, k);
    Rational yu = y + schedule_.h_at(k);
    for (Integer i = 0; i < n; ++i) self(self, x0 + Rational(i) * up_[k].period * len, up_[k].width * len, yu, k);
  };
  visit(visit, Rational(0), Rational(1), Rational(0), 0);
  return out;
}

struct WindowBuilder {
  const ConstructionMeasure& m;
  const Ball& ball;
  Window& out;
  Rational xlo, xhi, merge_limit;
  std::size_t work = 0;

  WindowBuilder(const ConstructionMeasure& measure, const Ball& b, Window& w)
      : m(measure), ball(b), out(w) {
    xlo = ball.center.x - ball.radius;
    xhi = ball.center.x + ball.radius;
    merge_limit = rational_from_double(m.options_.merge_tolerance) * ball.radius;
  }

  void tick() {
    if (++work > m.options_.budget) throw ResourceExhausted("window evaluation exceeded its budget");
  }

  // Chord of the ball at height y in normalized units, if the line meets it.
  std::optional<std::pair<double, double>> normalized_chord(const Rational& y) const {
    Rational dy = y - ball.center.y;
    if (dy * dy > ball.radius * ball.radius) return std::nullopt;
    double uy = to_double(dy / ball.radius);
    return std::make_pair(uy, std::sqrt(std::max(0.0, 1.0 - uy * uy)));
  }

  void emit(const Rational& x0, const Rational& x1, const Rational& y, double density) {
    tick();
    auto ch = normalized_chord(y);
    if (!ch) return;
    double u0 = std::max(to_double((x0 - ball.center.x) / ball.radius), -ch->second);
    double u1 = std::min(to_double((x1 - ball.center.x) / ball.radius), ch->second);
    if (u1 > u0 && density > 0) out.segments.push_back({u0, u1, ch->first, density});
  }

  void node(const Rational& x0, const Rational& len, const Rational& y, int g) {
    tick();
    if (g == m.generation_) {
      emit(x0, x0 + len, y, 1.0);
      return;
    }
    if (!box_meets_ball(x0, x0 + len, y, y + m.span_[g], ball)) return;
    int l = g + 1;
    const Integer& n = m.schedule_.n_at(l);
    block(l, x0, m.down_[l].width * len, m.down_[l].period * len, n, y);
    block(l, x0, m.up_[l].width * len, m.up_[l].period * len, n, y + m.schedule_.h_at(l));
  }

  struct Run {
    Integer first, last;
    Rational y, weight;
    double uy, variance;
  };

  // A run of whole children at one height, replaced by one uniform piece
  // with the same mass, centroid and horizontal variance. The piece is not
  // clipped, so mass is kept exactly; it can overhang the chord by at most
  // a fraction of one period.
  void emit_run(const Rational& first, const Rational& w, const Rational& period, const Integer& a,
                const Integer& b, const Run& run) {
    tick();
    Integer count = b - a + 1;
    Rational center = first + Rational(a) * period + (Rational(count - 1) * period + w) / 2;
    Rational cnt(count);
    double var = to_double(period * period * (cnt * cnt - 1) / (ball.radius * ball.radius)) / 12;
    double wn = to_double(w / ball.radius);
    var += wn * wn * run.variance;
    double len = std::sqrt(12 * var);
    double mass = to_double(cnt * w * run.weight / ball.radius);
    double u = to_double((center - ball.center.x) / ball.radius);
    if (len > 0 && mass > 0) out.segments.push_back({u - len / 2, u + len / 2, run.uy, mass / len});
  }

  void block(int l, const Rational& first, const Rational& w, const Rational& period, const Integer& count,
             const Rational& y) {
    tick();
    Rational last_end = first + Rational(count - 1) * period + w;
    if (!box_meets_ball(first, last_end, y, y + m.span_[l], ball)) return;
    Integer lo = ceil_of((xlo - first - w) / period);
    Integer hi = floor_of((xhi - first) / period);
    if (lo < 0) lo = 0;
    if (hi > count - 1) hi = count - 1;
    if (lo > hi) return;
    if (sgn(merge_limit) == 0 || period > merge_limit) {
      if (hi - lo + 1 > Integer(static_cast<unsigned long>(m.options_.budget)))
        throw ResourceExhausted("window evaluation exceeded its budget");
      for (Integer i = lo; i <= hi; ++i) node(first + Rational(i) * period, w, y, l);
      return;
    }
    std::set<Integer> straddlers;
    std::vector<Run> runs;
    for (const auto& o : m.offsets_[l]) {
      Rational yy = y + o.dy;
      auto ch = normalized_chord(yy);
      if (!ch) continue;
      Rational half = rational_from_double(ch->second) * ball.radius;
      Rational c0 = ball.center.x - half - first;
      Rational c1 = ball.center.x + half - first;
      Integer ia = ceil_of((c0 - w) / period), ib = floor_of(c1 / period);
      if (ia < lo) ia = lo;
      if (ib > hi) ib = hi;
      if (ia > ib) continue;
      Integer fa = ceil_of(c0 / period), fb = floor_of((c1 - w) / period);
      if (fa < ia) fa = ia;
      if (fb > ib) fb = ib;
      if (fa > fb) {
        for (Integer i = ia; i <= ib; ++i) straddlers.insert(i);
        continue;
      }
      for (Integer i = ia; i < fa; ++i) straddlers.insert(i);
      for (Integer i = fb + 1; i <= ib; ++i) straddlers.insert(i);
      runs.push_back({fa, fb, yy, o.weight, ch->first, o.variance});
    }
    for (const auto& run : runs) {
      Integer a = run.first;
      auto flush = [&](const Integer& b) {
        if (a <= b) emit_run(first, w, period, a, b, run);
      };
      for (auto it = straddlers.lower_bound(run.first); it != straddlers.end() && *it <= run.last; ++it) {
        flush(*it - 1);
        a = *it + 1;
      }
      flush(run.last);
    }
    for (const auto& i : straddlers) node(first + Rational(i) * period, w, y, l);
  }
};

Window ConstructionMeasure::window(const Ball& ball) const {
  Window w;
  WindowBuilder b(*this, ball, w);
  b.node(Rational(0), Rational(1), Rational(0), 0);
  w.touched = b.work;
  return w;
}

}  // namespace betacantor
