#include "betacantor/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "betacantor/error.hpp"

namespace betacantor {

AtomicMeasure atomize(const SegmentMeasure& mu, double spacing, std::size_t budget) {
  require(spacing > 0, "atom spacing must be positive");
  std::vector<Atom> atoms;
  for (const auto& seg : mu.segments()) {
    double len = to_double(seg.length());
    double count = std::floor(len / spacing) + 1;
    if (double(atoms.size()) + count > double(budget)) throw ResourceExhausted("atomization exceeded its budget");
    auto c = static_cast<long>(count);
    double m = to_double(seg.mass()) / double(c);
    double y = to_double(seg.y());
    for (long i = 0; i < c; ++i)
      atoms.push_back({{to_double(seg.left.x + seg.length() * Rational(2 * i + 1) / Rational(2 * c)), y}, m});
  }
  return AtomicMeasure(std::move(atoms));
}

AtomicMeasure atomize(const ConstructionMeasure& mu, double spacing, std::size_t budget) {
  return AtomicMeasure(mu.coarse_atoms(spacing, budget));
}

void LatticeOptions::validate() const {
  // With separation 10 r_k and reach 28 r_k the invariants need A0 well
  // above 28/18; A0 > 28 keeps every level strictly inside its parent's
  // 5B ball with room to spare.
  require(a0 > 28, "A0 must exceed 28");
  require(c0 >= 1, "C0 must be at least 1");
  require(depth >= 0 && depth <= 12, "lattice depth must lie in [0, 12]");
}

double Lattice::level_radius(int k) const { return unit * std::pow(options.a0, -k); }

double Lattice::side_length(int k) const { return 56 * options.c0 * unit * std::pow(options.a0, -k); }

namespace {

struct CellKey {
  long long x, y;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<long long>()(k.x * 1000003LL) ^ std::hash<long long>()(k.y);
  }
};

// Points bucketed in square cells, for radius queries no larger than one cell.
class CellGrid {
 public:
  CellGrid(Point origin, double cell) : origin_(origin), cell_(cell) {}

  CellKey key(Point p) const {
    return {static_cast<long long>(std::floor((p.x - origin_.x) / cell_)),
            static_cast<long long>(std::floor((p.y - origin_.y) / cell_))};
  }

  void add(Point p, std::size_t id) { cells_[key(p)].push_back(id); }

  template <class Fn>
  void near(Point p, Fn fn) const {
    CellKey c = key(p);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find({c.x + dx, c.y + dy});
        if (it == cells_.end()) continue;
        for (std::size_t id : it->second) fn(id);
      }
  }

 private:
  Point origin_;
  double cell_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

// Greedy maximal net: atoms in `order`, kept when farther than `sep` from
// every center kept so far.
std::vector<std::size_t> greedy_net(const std::vector<Atom>& atoms, const std::vector<std::size_t>& order, double sep,
                                    Point origin) {
  CellGrid grid(origin, sep);
  std::vector<std::size_t> centers;
  for (std::size_t i : order) {
    Point p = atoms[i].position;
    bool free = true;
    grid.near(p, [&](std::size_t c) {
      if (free && distance(atoms[centers[c]].position, p) <= sep) free = false;
    });
    if (!free) continue;
    grid.add(p, centers.size());
    centers.push_back(i);
  }
  return centers;
}

// Slot of the center nearest to p; ties go to the earlier center.
std::size_t nearest_center(const std::vector<Atom>& atoms, const std::vector<std::size_t>& centers,
                           const CellGrid& grid, Point p) {
  std::size_t best = centers.size();
  double best_d = 0.0;
  grid.near(p, [&](std::size_t c) {
    double d = distance(atoms[centers[c]].position, p);
    if (best == centers.size() || d < best_d || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  });
  ensure(best < centers.size(), "lattice net is not maximal");
  return best;
}

}  // namespace

Lattice build_lattice(const AtomicMeasure& mu, const LatticeOptions& options) {
  options.validate();
  const auto& atoms = mu.atoms();
  require(!atoms.empty(), "lattice needs at least one atom");
  for (const auto& a : atoms) require(a.mass > 0, "lattice atoms must have positive mass");

  Lattice lat;
  lat.options = options;
  double x0 = atoms[0].position.x, x1 = x0, y0 = atoms[0].position.y, y1 = y0;
  for (const auto& a : atoms) {
    x0 = std::min(x0, a.position.x);
    x1 = std::max(x1, a.position.x);
    y0 = std::min(y0, a.position.y);
    y1 = std::max(y1, a.position.y);
  }
  // Root center: the atom nearest the middle of the bounding box.
  Point mid{(x0 + x1) / 2, (y0 + y1) / 2};
  std::size_t root_atom = 0;
  for (std::size_t i = 1; i < atoms.size(); ++i)
    if (distance(atoms[i].position, mid) < distance(atoms[root_atom].position, mid)) root_atom = i;
  double reach = 0.0;
  for (const auto& a : atoms) reach = std::max(reach, distance(a.position, atoms[root_atom].position));
  lat.unit = reach > 0 ? reach / 28 * (1 + 1e-12) : 1.0;
  double magnitude = std::max({std::abs(x0), std::abs(x1), std::abs(y0), std::abs(y1), lat.unit});
  if (lat.level_radius(options.depth) < 1e-12 * magnitude)
    throw ResourceExhausted("lattice depth exceeds floating point resolution");

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Atom &p = atoms[a], &q = atoms[b];
    if (p.mass != q.mass) return p.mass > q.mass;
    if (p.position.x != q.position.x) return p.position.x < q.position.x;
    if (p.position.y != q.position.y) return p.position.y < q.position.y;
    return a < b;
  });

  const int depth = options.depth;
  Point origin{x0, y0};
  std::vector<std::vector<std::size_t>> centers(depth + 1);
  std::vector<CellGrid> grids;
  grids.emplace_back(origin, 1.0);  // level 0 is the single root
  for (int k = 1; k <= depth; ++k) {
    double sep = 10 * lat.level_radius(k);
    centers[k] = greedy_net(atoms, order, sep, origin);
    grids.emplace_back(origin, sep);
    for (std::size_t c = 0; c < centers[k].size(); ++c) grids[k].add(atoms[centers[k][c]].position, c);
  }
  centers[0] = {root_atom};

  // owner[k][atom]: slot of the level-k center whose cube holds the atom.
  std::vector<std::vector<std::size_t>> owner(depth + 1, std::vector<std::size_t>(atoms.size(), 0));
  if (depth >= 1)
    for (std::size_t i = 0; i < atoms.size(); ++i)
      owner[depth][i] = nearest_center(atoms, centers[depth], grids[depth], atoms[i].position);
  for (int k = depth - 1; k >= 1; --k) {
    std::vector<std::size_t> up(centers[k + 1].size());
    for (std::size_t c = 0; c < up.size(); ++c)
      up[c] = nearest_center(atoms, centers[k], grids[k], atoms[centers[k + 1][c]].position);
    for (std::size_t i = 0; i < atoms.size(); ++i) owner[k][i] = up[owner[k + 1][i]];
  }

  lat.levels.resize(depth + 1);
  std::vector<std::vector<std::size_t>> cube_of(depth + 1);  // slot -> cube id
  for (int k = 0; k <= depth; ++k) {
    std::vector<std::vector<std::size_t>> members(centers[k].size());
    for (std::size_t i = 0; i < atoms.size(); ++i) members[owner[k][i]].push_back(i);
    cube_of[k].assign(centers[k].size(), 0);
    for (std::size_t c = 0; c < centers[k].size(); ++c) {
      ensure(!members[c].empty(), "lattice cube without atoms");
      LatticeCube q;
      q.level = k;
      q.center_atom = centers[k][c];
      q.center = atoms[q.center_atom].position;
      q.radius = lat.level_radius(k);
      for (std::size_t i : members[c]) q.mass += atoms[i].mass;
      q.members = std::move(members[c]);
      if (k > 0) {
        std::size_t parent = cube_of[k - 1][owner[k - 1][q.members.front()]];
        q.parent = parent;
        lat.cubes[parent].children.push_back(lat.cubes.size());
      }
      cube_of[k][c] = lat.cubes.size();
      lat.levels[k].push_back(lat.cubes.size());
      lat.cubes.push_back(std::move(q));
    }
  }
  LatticeCheck check = check_lattice(lat, mu);
  if (!check.ok()) throw InvariantViolation("lattice invariant failed: " + check.failures.front());
  return lat;
}

LatticeCheck check_lattice(const Lattice& lat, const AtomicMeasure& mu) {
  LatticeCheck out;
  const auto& atoms = mu.atoms();
  auto fail = [&](bool& flag, std::string msg) {
    flag = false;
    if (out.failures.size() < 20) out.failures.push_back(std::move(msg));
  };
  std::vector<std::vector<std::size_t>> owner(lat.levels.size(), std::vector<std::size_t>(atoms.size(), SIZE_MAX));
  for (std::size_t k = 0; k < lat.levels.size(); ++k) {
    std::size_t seen = 0;
    for (std::size_t id : lat.levels[k]) {
      const LatticeCube& q = lat.cubes[id];
      for (std::size_t i : q.members) {
        if (i >= atoms.size() || owner[k][i] != SIZE_MAX) {
          fail(out.partition, "atom " + std::to_string(i) + " repeated or unknown at level " + std::to_string(k));
          continue;
        }
        owner[k][i] = id;
        ++seen;
      }
    }
    if (seen != atoms.size()) fail(out.partition, "level " + std::to_string(k) + " does not cover every atom");
  }
  for (std::size_t k = 1; k < lat.levels.size(); ++k)
    for (std::size_t id : lat.levels[k]) {
      const LatticeCube& q = lat.cubes[id];
      if (!q.parent) {
        fail(out.nesting, "cube " + std::to_string(id) + " has no parent");
        continue;
      }
      for (std::size_t i : q.members)
        if (i < atoms.size() && owner[k - 1][i] != *q.parent)
          fail(out.nesting, "cube " + std::to_string(id) + " is split between parents");
    }
  for (std::size_t id = 0; id < lat.cubes.size(); ++id) {
    const LatticeCube& q = lat.cubes[id];
    for (std::size_t i : q.members)
      if (i < atoms.size() && distance(atoms[i].position, q.center) > 28 * q.radius)
        fail(out.containment, "cube " + std::to_string(id) + " leaves 28B(Q)");
    for (std::size_t i : mu.members(q.center, q.radius))
      if (!std::binary_search(q.members.begin(), q.members.end(), i))
        fail(out.containment, "atom " + std::to_string(i) + " in B(Q) of cube " + std::to_string(id) + " lies outside it");
  }
  for (std::size_t k = 1; k < lat.levels.size(); ++k) {
    double r = lat.level_radius(static_cast<int>(k));
    CellGrid grid({0, 0}, 10 * r);
    for (std::size_t id : lat.levels[k]) {
      Point p = lat.cubes[id].center;
      grid.near(p, [&](std::size_t other) {
        if (distance(lat.cubes[other].center, p) <= 10 * r)
          fail(out.disjoint, "5B balls of cubes " + std::to_string(other) + " and " + std::to_string(id) + " meet");
      });
      grid.add(p, id);
    }
  }
  return out;
}

}  // namespace betacantor
