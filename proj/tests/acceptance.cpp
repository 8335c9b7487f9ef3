// Acceptance checks AC1 to AC12. Prints one PASS or FAIL line per criterion
// and exits nonzero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "betacantor/beta.hpp"
#include "betacantor/construction.hpp"
#include "betacantor/corona.hpp"
#include "betacantor/density.hpp"
#include "betacantor/experiments.hpp"
#include "betacantor/lattice.hpp"
#include "betacantor/parallel.hpp"

using namespace betacantor;
namespace fs = std::filesystem;

namespace {

constexpr double kLambda = 0.8408964152537145;  // 2^(-1/4)

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Rational dyadic(std::mt19937_64& rng, double lo, double hi) {
  return rational_from_double(std::ldexp(std::round(std::ldexp(uniform(rng, lo, hi), 20)), -20));
}

AtomicMeasure random_cloud(std::mt19937_64& rng, int n, double height) {
  std::vector<Atom> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back({{uniform(rng, 0, 1), height * uniform(rng, 0, 1)}, uniform(rng, 0.5, 1.5)});
  return AtomicMeasure(std::move(atoms));
}

// AC1: the search at p = 2 against the closed form.
Outcome ac1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Window w;
    if (t % 2 == 0) {
      std::vector<Atom> atoms;
      int n = 3 + static_cast<int>(rng() % 18);
      for (int i = 0; i < n; ++i) atoms.push_back({{uniform(rng, -1, 1), uniform(rng, -1, 1)}, uniform(rng, 0.1, 2)});
      w = AtomicMeasure(atoms).window(Ball::from_doubles({0, 0}, 2));
    } else {
      std::vector<WeightedSegment> segs;
      int n = 1 + static_cast<int>(rng() % 10);
      for (int i = 0; i < n; ++i) {
        Rational x0 = dyadic(rng, -1, 0.8), y = dyadic(rng, -1, 1);
        Rational len = dyadic(rng, 0.01, 0.5);
        segs.emplace_back(RationalPoint{x0, y}, RationalPoint{x0 + len, y}, dyadic(rng, 0.1, 2));
      }
      w = SegmentMeasure(segs).window(Ball::from_doubles({0, 0}, 2));
    }
    double closed = fit_line_p2(w).objective;
    double search = fit_line_search(w, 2.0).objective;
    double rel = std::abs(search - closed) / std::max(closed, 1e-300);
    if (closed == 0 && search == 0) rel = 0;
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-6, "max relative gap " + fmt("%.3g", worst) + " over 100 measures (tolerance 1e-6)"};
}

// AC2: collinear supports give zero for both variants.
Outcome ac2() {
  std::mt19937_64 rng(202);
  const double ps[] = {1.0, 1.5, 2.0, 3.0};
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    double p = ps[t % 4];
    int kind = (t / 4) % 3;
    std::vector<Atom> atoms;
    std::vector<WeightedSegment> segs;
    Point center;
    if (kind == 0) {
      // Atoms on a slanted line.
      double phi = uniform(rng, 0, M_PI), c = uniform(rng, -1, 1);
      Point n{std::cos(phi), std::sin(phi)}, d{-n.y, n.x};
      int m = 2 + static_cast<int>(rng() % 19);
      for (int i = 0; i < m; ++i) {
        double s = uniform(rng, -1, 1);
        atoms.push_back({{c * n.x + s * d.x, c * n.y + s * d.y}, uniform(rng, 0.1, 2)});
      }
      center = atoms[rng() % atoms.size()].position;
    } else {
      // Horizontal segments on one height, with atoms on it in the mixed case.
      Rational y = dyadic(rng, -1, 1);
      int m = 1 + static_cast<int>(rng() % 10);
      for (int i = 0; i < m; ++i) {
        Rational x0 = dyadic(rng, -1, 0.8);
        segs.emplace_back(RationalPoint{x0, y}, RationalPoint{x0 + dyadic(rng, 0.001, 0.3), y}, dyadic(rng, 0.1, 2));
      }
      if (kind == 2)
        for (int i = 0; i < 5; ++i) atoms.push_back({{uniform(rng, -1, 1), to_double(y)}, uniform(rng, 0.1, 2)});
      center = to_point(segs[rng() % segs.size()].left);
    }
    SegmentMeasure sm(segs);
    AtomicMeasure am(atoms);
    SumMeasure mu({&sm, &am});
    double r = std::pow(10.0, uniform(rng, -4, 0.5));
    auto b = beta_pair(mu, Ball(to_rational(center), rational_from_double(r)), p);
    worst = std::max({worst, b.beta, b.beta_tilde});
  }
  return {worst <= 1e-12, "max beta over 1000 collinear windows " + fmt("%.3g", worst) + " (tolerance 1e-12)"};
}

// AC3: exact mass and counts.
Outcome ac3() {
  bool ok = true;
  std::string bad;
  auto check = [&](const Schedule& s, int k_hi, const std::string& name) {
    Integer previous = 1;
    for (int k = 0; k <= k_hi; ++k) {
      GenerationStats st = generation_stats(s, k);
      bool good = st.total_mass == 1 && (k == 0 ? st.count == 1 : st.count == 2 * s.n_at(k) * previous);
      if (!good) ok = false, bad += " " + name + "/" + std::to_string(k);
      previous = st.count;
    }
  };
  check(schedule_thm11(3), 3, "thm11");
  check(schedule_thm12(3), 3, "thm12");
  check(schedule_tame(6), 6, "tame");
  // Full enumeration where it is small enough.
  for (auto [s, k] : {std::pair{schedule_thm11(3), 1}, std::pair{schedule_tame(6), 2}}) {
    auto e = enumerate_generation(s, k);
    if (e.exact_total_mass() != 1 || Integer(static_cast<unsigned long>(e.size())) != generation_stats(s, k).count)
      ok = false, bad += " enumeration";
  }
  auto fig = enumerate_generation(schedule_custom({make_rational(1, 2), make_rational(1, 4)},
                                                  {make_rational(1, 16), make_rational(1, 1024)}, {3, 4}),
                                  2);
  if (fig.size() != 48) ok = false, bad += " m_2";
  return {ok, ok ? "mass 1 and m_k = 2 n_k m_{k-1} exactly: faithful k <= 3, tame k <= 6, m_2 = 48 for (3, 4)"
                 : "failures:" + bad};
}

// AC4: window increments over a_{k+1}^{2/p}, and the tilde version.
Outcome ac4() {
  Schedule s = schedule_thm11(4);
  ConstructionMeasure mu(s, 4);
  double p = 1.5;
  ScaleGrid grid{s.h_d(4), s.h_d(1) / 2, kLambda};
  auto radii = grid.radii();
  double lo = INFINITY, hi = 0, tlo = INFINITY, thi = 0;
  for (const auto& x : sample_addresses(s, 4, 10, 404)) {
    auto samples = scale_samples(mu, point_of(s, x), radii, p);
    for (const auto& row : window_increments(samples, grid.weight(), s, 1, 3, p)) {
      lo = std::min(lo, row.beta_norm);
      hi = std::max(hi, row.beta_norm);
      tlo = std::min(tlo, row.tilde_norm);
      thi = std::max(thi, row.tilde_norm);
    }
  }
  bool ok = lo > 0 && hi <= 10 * lo && tlo > 0 && thi <= 10 * tlo;
  return {ok, "beta sum / a^(2/p) in [" + fmt("%.3g", lo) + ", " + fmt("%.3g", hi) + "], tilde / (h + a^(2/p)) in [" +
                  fmt("%.3g", tlo) + ", " + fmt("%.3g", thi) + "], band factor <= 10, 10 points, k = 1..3"};
}

// AC5: divergence probe on the thm12 schedule at p = 3.
Outcome ac5() {
  Schedule s = schedule_thm12(4);
  ConstructionMeasure mu(s, 4);
  double p = 3.0;
  std::vector<double> c(3, INFINITY);
  for (const auto& x : sample_addresses(s, 4, 10, 505)) {
    RationalPoint px = point_of(s, x);
    for (int k = 1; k <= 3; ++k)
      c[k - 1] = std::min(c[k - 1], beta_lower_bound_probe(mu, px, k, p, s) / std::pow(s.a_d(k), 1 / p));
  }
  double lo = *std::min_element(c.begin(), c.end()), hi = *std::max_element(c.begin(), c.end());
  bool ok = lo > 0 && hi <= 4 * lo;
  return {ok, "c_k = " + fmt("%.3g", c[0]) + ", " + fmt("%.3g", c[1]) + ", " + fmt("%.3g", c[2]) +
                  " (positive, spread within a factor 4), 10 points"};
}

// AC6: density ratio on U_k at r = h_k / 2.
Outcome ac6() {
  Schedule s = schedule_thm11(4);
  ConstructionMeasure mu(s, 4);
  std::mt19937_64 rng(606);
  double c = 0;
  bool decreasing = true;
  for (int t = 0; t < 10; ++t) {
    PointAddress x = sample_point_with_branches(s, 4, 1, 3, Branch::up, rng);
    auto rows = unrectifiability_witness(mu, s, x, 1, 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      c = std::max(c, rows[i].ratio / rows[i].a);
      if (i > 0 && !(rows[i].ratio < rows[i - 1].ratio)) decreasing = false;
    }
  }
  bool ok = decreasing && c <= 2;
  return {ok, "ratio <= C a_k with C = " + fmt("%.4g", c) + (decreasing ? ", strictly decreasing in k" : ", NOT decreasing") +
                  ", 10 points in U_1 to U_3"};
}

// AC7: mu_j(B) / diam(B) over random balls.
Outcome ac7() {
  Schedule s = schedule_thm11(3);
  std::mt19937_64 rng(707);
  std::vector<Ball> balls;
  for (int t = 0; t < 1000; ++t) {
    RationalPoint x = point_of(s, sample_point(s, 3, rng));
    double r = std::pow(10.0, uniform(rng, std::log10(s.h_d(3)) - 1, 0.3));
    Rational rr = rational_from_double(r);
    balls.emplace_back(RationalPoint{x.x + rr * dyadic(rng, -1, 1), x.y + rr * dyadic(rng, -1, 1)}, rr);
  }
  std::vector<double> max_ratio;
  for (int j = 1; j <= 3; ++j) {
    ConstructionMeasure mu(s, j);
    auto ratios = parallel_map<double>(balls.size(), [&](std::size_t i) {
      return mu.ball_mass(balls[i]) / (2 * balls[i].radius_d());
    });
    max_ratio.push_back(*std::max_element(ratios.begin(), ratios.end()));
  }
  bool monotone = true;
  for (std::size_t j = 1; j < max_ratio.size(); ++j)
    if (max_ratio[j] > max_ratio[j - 1] * (1 + 1e-9)) monotone = false;
  double c = *std::max_element(max_ratio.begin(), max_ratio.end());
  bool ok = monotone && c <= 2;
  return {ok, "max mu_j(B)/diam(B) for j = 1..3: " + fmt("%.4g", max_ratio[0]) + ", " + fmt("%.4g", max_ratio[1]) + ", " +
                  fmt("%.4g", max_ratio[2]) + "; C = " + fmt("%.4g", c) + " over 1000 balls"};
}

// AC8: pushforward masses and displacement of the transport map.
Outcome ac8() {
  Schedule s = schedule_thm11(3);
  bool exact = true;
  std::size_t cells = 0;
  auto check_child = [&](const SegmentAddress& child) {
    TransportPreimage pre = transport_preimage(s, child);
    if (pre.t1 - pre.t0 != segment_geometry(s, child).length) exact = false;
    ++cells;
  };
  for (Branch b : {Branch::down, Branch::up})
    for (Integer i = 0; i < s.n_at(1); ++i) check_child(SegmentAddress{{AddressStep{i, b}}});
  std::mt19937_64 rng(808);
  for (int k = 1; k <= 2; ++k)
    for (int t = 0; t < 2000; ++t) check_child(sample_point(s, k + 1, rng).segment);
  std::vector<double> disp;
  for (int k = 0; k <= 2; ++k) {
    double worst = 0;
    for (int t = 0; t < 2000; ++t) {
      PointAddress x = sample_point(s, k, rng);
      RationalPoint a = point_of(s, x), b = point_of(s, transport(s, x));
      Rational dx = b.x - a.x, dy = b.y - a.y;
      worst = std::max(worst, std::sqrt(to_double((dx * dx + dy * dy) / (s.h_at(k + 1) * s.h_at(k + 1)))));
    }
    disp.push_back(worst);
  }
  double c = *std::max_element(disp.begin(), disp.end());
  bool ok = exact && c <= 2;
  return {ok, std::string(exact ? "exact" : "INEXACT") + " cell masses on " + std::to_string(cells) +
                  " cells; max displacement / h_{k+1} for k = 0..2: " + fmt("%.4g", disp[0]) + ", " + fmt("%.4g", disp[1]) +
                  ", " + fmt("%.4g", disp[2])};
}

AtomicMeasure atomized_e2() { return atomize(ConstructionMeasure(schedule_thm11(2), 2), 3.5e-5); }

// AC9: lattice invariants.
Outcome ac9(const AtomicMeasure& e2) {
  std::mt19937_64 rng(909);
  int passed = 0;
  for (int t = 0; t < 10; ++t) {
    auto mu = random_cloud(rng, 50 + 50 * t, 0.3);
    if (check_lattice(build_lattice(mu, {50, 10, 3}), mu).ok()) ++passed;
  }
  bool e2_ok = check_lattice(build_lattice(e2, {50, 10, 2}), e2).ok();
  return {passed == 10 && e2_ok, std::to_string(passed) + "/10 clouds (n = 50..500, depth 3) and atomized E_2 (" +
                                     std::to_string(e2.size()) + " atoms, depth 2): " + (e2_ok ? "pass" : "FAIL")};
}

// AC10: packing ratio under grid refinement.
Outcome ac10(const AtomicMeasure& e2) {
  auto gap = [](const AtomicMeasure& mu, int depth, double& ratio) {
    Lattice lat = build_lattice(mu, {50, 10, depth});
    CoronaTree t = corona_decompose(lat, mu, 2.0);
    PackingOptions po;
    po.max_points = 256;
    po.grid = packing_grid(lat, kLambda);
    auto coarse = packing_report(t, lat, mu, po);
    po.grid = packing_grid(lat, std::sqrt(kLambda));
    auto fine = packing_report(t, lat, mu, po);
    ratio = coarse.ratio;
    if (!std::isfinite(coarse.ratio) || !std::isfinite(fine.ratio)) return HUGE_VAL;
    return std::abs(fine.ratio - coarse.ratio) / coarse.ratio;
  };
  double ratio = 0, e2_ratio = 0;
  double e2_gap = gap(e2, 1, e2_ratio), worst = e2_gap;
  std::mt19937_64 rng(1010);
  for (int t = 0; t < 10; ++t) worst = std::max(worst, gap(random_cloud(rng, 100 + 40 * t, 0.05), 2, ratio));
  return {worst < 0.2, "E_2 ratio " + fmt("%.4g", e2_ratio) + " (change " + fmt("%.3g", e2_gap) +
                           "); worst relative change over E_2 and 10 clouds " + fmt("%.3g", worst) + " (limit 0.2)"};
}

// AC11: the approximating measure.
Outcome ac11() {
  std::mt19937_64 rng(1111);
  bool exact = true, tested = true;
  double worst = 0;
  std::size_t balls = 0;
  for (int t = 0; t < 10; ++t) {
    auto mu = random_cloud(rng, 80 + 10 * t, 0.2);
    MuTildeOptions o;
    o.rho = 0.02;
    o.epsilon = 0.125;
    o.c_star = 50;
    MuTilde tilde = build_mu_tilde(mu, o);
    for (std::size_t i = 0; i < tilde.balls.size(); ++i) {
      const auto& b = tilde.balls[i];
      if (tilde.measure.segments()[i].mass() != rational_from_double(b.mass) ||
          b.mass != mu.mass_within(b.center, b.radius))
        exact = false;
      if (!doubling_test(mu, b.center, b.radius, o.big_lambda, o.c_star).passes()) tested = false;
    }
    balls += tilde.balls.size();
    worst = std::max(worst, compare_maximal(mu, tilde, ScaleGrid{o.rho, 4, kLambda}.radii()).ratio);
  }
  bool ok = exact && tested && worst < 10;
  return {ok, std::string(exact ? "exact" : "INEXACT") + " masses, " + (tested ? "all" : "NOT all") + " of " +
                  std::to_string(balls) + " balls pass both conditions; maximal comparison C = " + fmt("%.3g", worst) +
                  " (limit 10)"};
}

// AC12: byte-identical reruns of every command.
Outcome ac12() {
  fs::path root = fs::temp_directory_path() / ("betacantor_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  ExperimentConfig c;
  c.flavor = "thm11";
  c.k_max = 3;
  c.samples = 3;
  c.p = {1.5, 2};
  c.timestamp = false;
  std::size_t files = 0;
  bool same = true;
  for (const auto& cmd : command_names()) {
    ExperimentConfig run = c;
    if (cmd == "corona" || cmd == "approx") run.k_max = 2;
    run.out_dir = (root / (cmd + "_a")).string();
    auto first = run_command(cmd, run);
    run.out_dir = (root / (cmd + "_b")).string();
    auto second = run_command(cmd, run);
    if (first.files.size() != second.files.size()) same = false;
    for (std::size_t i = 0; same && i < first.files.size(); ++i) {
      auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
      };
      if (slurp(first.files[i]) != slurp(second.files[i])) same = false;
      ++files;
    }
  }
  fs::remove_all(root);
  return {same, std::to_string(files) + " files from all six commands compared byte for byte"};
}

}  // namespace

int main() {
  AtomicMeasure e2;
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"AC1", ac1},
      {"AC2", ac2},
      {"AC3", ac3},
      {"AC4", ac4},
      {"AC5", ac5},
      {"AC6", ac6},
      {"AC7", ac7},
      {"AC8", ac8},
      {"AC9", [&] { return ac9(e2 = atomized_e2()); }},
      {"AC10", [&] { return ac10(e2); }},
      {"AC11", ac11},
      {"AC12", ac12},
  };
  int failed = 0;
  for (const auto& [name, run] : checks) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s %s (%.1f s)\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
