#include "betacantor/corona.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "betacantor/error.hpp"
#include "betacantor/parallel.hpp"
#include "json.hpp"

namespace betacantor {

double theta_2b(const AtomicMeasure& mu, const LatticeCube& q) {
  double r = 56 * q.radius;
  return mu.mass_within(q.center, r) / r;
}

CoronaTree corona_decompose(const Lattice& lat, const AtomicMeasure& mu, double c_thr) {
  require(c_thr > 1, "corona threshold must exceed 1");
  require(!lat.cubes.empty(), "empty lattice");
  CoronaTree t;
  t.c_thr = c_thr;
  t.theta.resize(lat.cubes.size());
  for (std::size_t i = 0; i < lat.cubes.size(); ++i) t.theta[i] = theta_2b(mu, lat.cubes[i]);
  t.tree_of.assign(lat.cubes.size(), SIZE_MAX);
  t.roots.push_back(0);
  t.trees.push_back({0});
  t.tree_of[0] = 0;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    std::size_t q = stack.back();
    stack.pop_back();
    const auto& kids = lat.cubes[q].children;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    if (q == 0) continue;
    std::size_t parent_tree = t.tree_of[*lat.cubes[q].parent];
    if (t.theta[q] > c_thr * t.root_theta(parent_tree)) {
      t.tree_of[q] = t.roots.size();
      t.roots.push_back(q);
      t.trees.push_back({q});
    } else {
      t.tree_of[q] = parent_tree;
      t.trees[parent_tree].push_back(q);
    }
  }
  return t;
}

CoronaCheck check_corona(const CoronaTree& t, const Lattice& lat, const AtomicMeasure& mu) {
  CoronaCheck c;
  std::vector<int> count(lat.cubes.size(), 0);
  for (const auto& tree : t.trees)
    for (std::size_t q : tree) ++count[q];
  for (int n : count)
    if (n != 1) c.disjoint_union = false;
  c.root_in_top = !t.roots.empty() && t.roots.front() == 0;
  for (std::size_t i = 0; i < t.trees.size(); ++i) {
    const auto& tree = t.trees[i];
    double th_r = t.root_theta(i);
    const LatticeCube& r = lat.cubes[t.roots[i]];
    if (r.mass > 0) c.root_mass_ratio = std::max(c.root_mass_ratio, mu.mass_within(r.center, 56 * r.radius) / r.mass);
    int deepest = 0;
    for (std::size_t q : tree) {
      if (th_r > 0) c.density_control = std::max(c.density_control, t.theta[q] / th_r);
      deepest = std::max(deepest, lat.cubes[q].level);
    }
    c.deepest_level = std::max<std::size_t>(c.deepest_level, static_cast<std::size_t>(deepest));
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t q : tree)
      if (lat.cubes[q].level == deepest && t.theta[q] > 0 && th_r > 0)
        closest = std::min(closest, std::max(t.theta[q] / th_r, th_r / t.theta[q]));
    if (std::isfinite(closest)) c.deepest_density_gap = std::max(c.deepest_density_gap, closest);
  }
  return c;
}

ScaleGrid packing_grid(const Lattice& lat, double lambda) {
  ScaleGrid g;
  g.r_min = lat.level_radius(lat.options.depth);
  g.r_max = 28 * lat.level_radius(0);
  g.lambda = lambda;
  if (g.r_min >= g.r_max) g.r_min = g.r_max * lambda;
  return g;
}

PackingReport packing_report(const CoronaTree& t, const Lattice& lat, const AtomicMeasure& mu,
                             const PackingOptions& o) {
  o.grid.validate();
  PackingReport r;
  r.roots = t.roots.size();
  for (std::size_t i = 0; i < t.roots.size(); ++i) r.lhs += t.root_theta(i) * lat.cubes[t.roots[i]].mass;
  for (std::size_t q = 1; q < lat.cubes.size(); ++q) r.c_star = std::max(r.c_star, t.theta[q]);
  if (lat.cubes.size() == 1) r.c_star = t.theta[0];
  r.rhs_mass = r.c_star * mu.total_mass();

  const auto& atoms = mu.atoms();
  std::vector<std::size_t> pick;
  std::size_t n = atoms.size(), m = std::min(n, std::max<std::size_t>(o.max_points, 1));
  double stride = double(n) / double(m);
  for (std::size_t i = 0; i < m; ++i) pick.push_back(static_cast<std::size_t>(i * stride));
  double picked_mass = 0.0;
  for (std::size_t i : pick) picked_mass += atoms[i].mass;
  auto radii = o.grid.radii();
  auto values = parallel_map<double>(
      pick.size(),
      [&](std::size_t j) {
        RationalPoint x = to_rational(atoms[pick[j]].position);
        std::vector<ScaleSample> samples;
        for (double rad : radii) samples.push_back({rad, beta_pair(mu, Ball(x, rational_from_double(rad)), 2)});
        return square_function(samples, o.grid.weight(), BetaVariant::beta).value;
      },
      o.threads);
  double sum = 0.0;
  for (std::size_t j = 0; j < pick.size(); ++j) sum += values[j] * atoms[pick[j]].mass;
  r.rhs_beta = picked_mass > 0 ? sum * mu.total_mass() / picked_mass : 0.0;
  r.beta_points = pick.size();
  double den = r.rhs_mass + r.rhs_beta;
  r.ratio = den > 0 ? r.lhs / den : std::numeric_limits<double>::infinity();
  return r;
}

MaximalBound maximal_via_corona(const CoronaTree& t, const Lattice& lat, const AtomicMeasure& mu, double lambda) {
  require(lambda > 0 && lambda < 1, "radius ratio must lie in (0, 1)");
  const auto& atoms = mu.atoms();
  MaximalBound out;
  out.bound.assign(atoms.size(), 0.0);
  for (std::size_t q = 0; q < lat.cubes.size(); ++q) {
    double b = t.c_thr * t.root_theta(t.tree_of[q]);
    for (std::size_t i : lat.cubes[q].members) out.bound[i] = std::max(out.bound[i], b);
  }
  std::vector<double> radii;
  double lo = 28 * lat.level_radius(lat.options.depth), hi = 56 * lat.level_radius(0);
  for (double r = hi; r >= lo * (1 - 1e-12); r *= lambda) radii.push_back(r);
  out.direct = parallel_map<double>(atoms.size(), [&](std::size_t i) {
    double m = 0.0;
    for (double r : radii) m = std::max(m, mu.mass_within(atoms[i].position, r) / r);
    return m;
  });
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (out.bound[i] > 0) out.constant = std::max(out.constant, out.direct[i] / out.bound[i]);
  return out;
}

void write_corona_json(std::ostream& out, const CoronaTree& t, const Lattice& lat, const CoronaCheck& c) {
  nlohmann::ordered_json j;
  j["c_thr"] = t.c_thr;
  j["a0"] = lat.options.a0;
  j["c0"] = lat.options.c0;
  j["depth"] = lat.options.depth;
  j["unit"] = lat.unit;
  j["cubes"] = lat.cubes.size();
  auto roots = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < t.roots.size(); ++i) {
    const LatticeCube& r = lat.cubes[t.roots[i]];
    nlohmann::ordered_json e;
    e["cube"] = t.roots[i];
    e["level"] = r.level;
    e["center"] = {r.center.x, r.center.y};
    e["radius"] = r.radius;
    e["mass"] = r.mass;
    e["theta"] = t.root_theta(i);
    e["tree_size"] = t.trees[i].size();
    roots.push_back(e);
  }
  j["roots"] = roots;
  j["check"] = {{"disjoint_union", c.disjoint_union},
                {"root_in_top", c.root_in_top},
                {"density_control", c.density_control},
                {"root_mass_ratio", c.root_mass_ratio},
                {"deepest_level", c.deepest_level},
                {"deepest_density_gap", c.deepest_density_gap}};
  out << j.dump(2) << "\n";
}

void write_packing_csv_header(std::ostream& out) {
  out << "lambda,roots,lhs,c_star,rhs_mass,rhs_beta,ratio,beta_points\n";
}

void write_packing_csv_row(std::ostream& out, double lambda, const PackingReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", lambda, r.roots, r.lhs, r.c_star,
                r.rhs_mass, r.rhs_beta, r.ratio, r.beta_points);
  out << buf;
}

}  // namespace betacantor
