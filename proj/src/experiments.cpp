#include "betacantor/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "betacantor/corona.hpp"
#include "betacantor/density.hpp"
#include "betacantor/error.hpp"
#include "betacantor/lattice.hpp"
#include "betacantor/svg.hpp"

namespace betacantor {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
  require(flavor == "thm11" || flavor == "thm12" || flavor == "tame" || flavor == "custom",
          "flavor must be thm11, thm12, tame or custom");
  if (flavor == "custom") {
    require(!a.empty() && a.size() == h.size() && a.size() == n.size(),
            "custom flavor needs a, h and n lists of equal nonzero length");
  } else {
    require(a.empty() && h.empty() && n.empty(), "a, h and n lists apply to the custom flavor only");
    require(k_max >= 1 && k_max <= 12, "k_max must lie in [1, 12]");
  }
  require(generation >= 0, "generation must be nonnegative");
  require(!p.empty(), "at least one p is needed");
  for (double v : p) require(std::isfinite(v) && v >= 1.0 && v <= 64.0, "p must lie in [1, 64]");
  require(samples >= 1 && samples <= 1'000'000, "samples must lie in [1, 1e6]");
  require(lambda > 0 && lambda < 1, "lambda must lie in (0, 1)");
  require(std::isfinite(r_min) && r_min >= 0 && std::isfinite(r_max) && r_max >= 0, "radii must be finite and >= 0");
  require(r_min == 0 || r_max == 0 || r_min < r_max, "r_min must be below r_max");
  require(merge_tolerance >= 0 && merge_tolerance <= 0.5, "merge tolerance must lie in [0, 0.5]");
  LatticeOptions{a0, c0, depth}.validate();
  require(c_thr > 1, "c_thr must exceed 1");
  require(spacing >= 0 && std::isfinite(spacing), "spacing must be finite and >= 0");
  require(max_points >= 1, "max_points must be positive");
  require(big_lambda > 1, "big_lambda must exceed 1");
  require(rho >= 0 && std::isfinite(rho), "rho must be finite and >= 0");
  require(epsilon > 0 && epsilon < 1, "epsilon must lie in (0, 1)");
  require(c_star >= 0 && std::isfinite(c_star), "c_star must be finite and >= 0");
}

ojson config_to_json(const ExperimentConfig& c) {
  ojson j;
  j["flavor"] = c.flavor;
  j["a"] = c.a;
  j["h"] = c.h;
  j["n"] = c.n;
  j["k_max"] = c.k_max;
  j["generation"] = c.generation;
  j["p"] = c.p;
  j["samples"] = c.samples;
  j["lambda"] = c.lambda;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["seed"] = c.seed;
  j["merge_tolerance"] = c.merge_tolerance;
  j["input"] = c.input;
  j["a0"] = c.a0;
  j["c0"] = c.c0;
  j["c_thr"] = c.c_thr;
  j["depth"] = c.depth;
  j["spacing"] = c.spacing;
  j["max_points"] = c.max_points;
  j["big_lambda"] = c.big_lambda;
  j["rho"] = c.rho;
  j["epsilon"] = c.epsilon;
  j["c_star"] = c.c_star;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "config must be a JSON object");
  ExperimentConfig c;
  auto known = config_to_json(c);
  for (const auto& [key, value] : j.items())
    require(known.contains(key) || key == "out_dir" || key == "timestamp" || key == "threads" ||
                key == "config_hash",
            "unknown config key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("flavor", c.flavor);
    get("a", c.a);
    get("h", c.h);
    get("n", c.n);
    get("k_max", c.k_max);
    get("generation", c.generation);
    get("p", c.p);
    get("samples", c.samples);
    get("lambda", c.lambda);
    get("r_min", c.r_min);
    get("r_max", c.r_max);
    get("seed", c.seed);
    get("merge_tolerance", c.merge_tolerance);
    get("input", c.input);
    get("a0", c.a0);
    get("c0", c.c0);
    get("c_thr", c.c_thr);
    get("depth", c.depth);
    get("spacing", c.spacing);
    get("max_points", c.max_points);
    get("big_lambda", c.big_lambda);
    get("rho", c.rho);
    get("epsilon", c.epsilon);
    get("c_star", c.c_star);
    get("out_dir", c.out_dir);
    get("timestamp", c.timestamp);
    get("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Schedule make_schedule(const ExperimentConfig& c) {
  c.validate();
  if (c.flavor == "thm11") return schedule_thm11(c.k_max);
  if (c.flavor == "thm12") return schedule_thm12(c.k_max);
  if (c.flavor == "tame") return schedule_tame(c.k_max);
  std::vector<Rational> a, h;
  std::vector<Integer> n;
  for (const auto& v : c.a) a.push_back(parse_rational(v));
  for (const auto& v : c.h) h.push_back(parse_rational(v));
  for (const auto& v : c.n) {
    Rational q = parse_rational(v);
    require(q.get_den() == 1, "n_k must be an integer");
    n.push_back(q.get_num());
  }
  return schedule_custom(std::move(a), std::move(h), std::move(n));
}

int measure_generation(const ExperimentConfig& c) {
  int k_max = c.flavor == "custom" ? static_cast<int>(c.a.size()) : c.k_max;
  int j = c.generation == 0 ? k_max : c.generation;
  require(j <= k_max, "generation exceeds the schedule length");
  return j;
}

std::vector<PointAddress> sample_addresses(const Schedule& s, int j, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PointAddress> out;
  for (int i = 0; i < count; ++i) out.push_back(sample_point(s, j, rng));
  return out;
}

std::vector<IncrementRow> window_increments(const std::vector<ScaleSample>& samples, double weight,
                                            const Schedule& s, int k_lo, int k_hi, double p) {
  require(k_lo >= 1 && k_hi < s.k_max(), "windows need h_{k+1}");
  std::vector<IncrementRow> rows;
  for (int k = k_lo; k <= k_hi; ++k) {
    IncrementRow row;
    row.k = k;
    row.p = p;
    row.r_lo = s.h_d(k + 1);
    row.r_hi = s.h_d(k) / 2;
    for (const auto& sm : samples) {
      if (!(sm.r > row.r_lo && sm.r <= row.r_hi)) continue;
      ++row.scales;
      row.beta_sum += sm.value.beta * sm.value.beta * weight;
      if (!std::isnan(sm.value.beta_tilde)) row.tilde_sum += sm.value.beta_tilde * sm.value.beta_tilde * weight;
    }
    double a = std::pow(s.a_d(k + 1), 2.0 / p);
    row.beta_norm = row.beta_sum / a;
    row.tilde_norm = row.tilde_sum / (row.r_lo + a);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// The measure a command works on: the construction mu_j, or a file.
struct Source {
  std::optional<Schedule> schedule;
  int generation = 0;
  std::unique_ptr<ConstructionMeasure> construction;
  SegmentMeasure segments;
  AtomicMeasure atoms;
  std::unique_ptr<SumMeasure> sum;
  const Measure* mu = nullptr;
  double extent = 1.0;  // support diameter, or 1 for the construction
};

Source load_source(const ExperimentConfig& c) {
  c.validate();
  Source src;
  if (c.input.empty()) {
    src.schedule = make_schedule(c);
    src.generation = measure_generation(c);
    ConstructionOptions o;
    o.merge_tolerance = c.merge_tolerance;
    src.construction = std::make_unique<ConstructionMeasure>(*src.schedule, src.generation, o);
    src.mu = src.construction.get();
    return src;
  }
  std::ifstream in(c.input);
  if (!in) throw IoError("cannot open input " + c.input);
  MeasureFile file = read_measure(in);
  require(!file.segments.empty() || !file.atoms.empty(), "input measure is empty");
  src.segments = SegmentMeasure(file.segments);
  src.atoms = AtomicMeasure(file.atoms);
  src.sum = std::make_unique<SumMeasure>(std::vector<const Measure*>{&src.segments, &src.atoms});
  src.mu = src.sum.get();
  double d = std::max(diam(file.segments), diam(file.atoms));
  if (!file.segments.empty() && !file.atoms.empty()) {
    // Cross distances, coarse but sufficient for picking default radii.
    double lo_x = INFINITY, hi_x = -INFINITY, lo_y = INFINITY, hi_y = -INFINITY;
    for (const auto& s : file.segments) {
      lo_x = std::min(lo_x, to_double(s.left.x));
      hi_x = std::max(hi_x, to_double(s.right.x));
      lo_y = std::min(lo_y, to_double(s.y()));
      hi_y = std::max(hi_y, to_double(s.y()));
    }
    for (const auto& a : file.atoms) {
      lo_x = std::min(lo_x, a.position.x);
      hi_x = std::max(hi_x, a.position.x);
      lo_y = std::min(lo_y, a.position.y);
      hi_y = std::max(hi_y, a.position.y);
    }
    d = std::max(d, std::hypot(hi_x - lo_x, hi_y - lo_y));
  }
  src.extent = d > 0 ? d : 1.0;
  return src;
}

std::vector<RationalPoint> sample_points(const Source& src, const ExperimentConfig& c) {
  std::vector<RationalPoint> out;
  if (src.schedule) {
    for (const auto& x : sample_addresses(*src.schedule, src.generation, c.samples, c.seed))
      out.push_back(point_of(*src.schedule, x));
    return out;
  }
  // Mass-weighted choice of a piece, then a dyadic offset along segments.
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& s : src.segments.segments()) cumulative.push_back(total += to_double(s.mass()));
  for (const auto& a : src.atoms.atoms()) cumulative.push_back(total += a.mass);
  require(total > 0, "input measure has no mass");
  std::mt19937_64 rng(c.seed);
  for (int i = 0; i < c.samples; ++i) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    std::size_t k = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    k = std::min(k, cumulative.size() - 1);
    if (k < src.segments.size()) {
      const auto& s = src.segments.segments()[k];
      Rational t = make_rational(Integer(static_cast<unsigned long>(rng() % (1u << 20))), Integer(1u << 20));
      out.push_back({s.left.x + t * s.length(), s.y()});
    } else {
      out.push_back(to_rational(src.atoms.atoms()[k - src.segments.size()].position));
    }
  }
  return out;
}

ScaleGrid scale_grid(const Source& src, const ExperimentConfig& c) {
  ScaleGrid g;
  g.lambda = c.lambda;
  if (src.schedule) {
    g.r_max = c.r_max > 0 ? c.r_max : 1.0;
    g.r_min = c.r_min > 0 ? c.r_min : src.schedule->h_d(src.generation) / 4;
  } else {
    g.r_max = c.r_max > 0 ? c.r_max : src.extent;
    g.r_min = c.r_min > 0 ? c.r_min : 1e-3 * src.extent;
  }
  require(g.r_min < g.r_max, "r_min must be below r_max");
  return g;
}

// Atoms for the lattice: the construction or the file, with segments cut
// into parts no longer than the spacing.
AtomicMeasure atomic_source(const Source& src, const ExperimentConfig& c, double& spacing) {
  spacing = c.spacing > 0 ? c.spacing : src.extent / 28 * std::pow(c.a0, -c.depth) / 10;
  if (src.construction) return atomize(*src.construction, spacing);
  std::vector<Atom> atoms = src.atoms.atoms();
  if (src.segments.size() > 0) {
    auto parts = atomize(src.segments, spacing);
    atoms.insert(atoms.end(), parts.atoms().begin(), parts.atoms().end());
  }
  return AtomicMeasure(std::move(atoms));
}

// Files of one command run, each tagged with the config hash.
class Output {
 public:
  Output(const ExperimentConfig& c, CommandResult& result)
      : config_(c), dir_(c.out_dir), hash_(config_hash(c)), result_(result) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
    ojson j;
    j["config_hash"] = hash_;
    j["config"] = config_to_json(c);
    auto out = open("config.json");
    out << j.dump(2) << "\n";
    close(out, "config.json");
    auto schema = open("SCHEMA.md");
    schema << schema_markdown();
    close(schema, "SCHEMA.md");
  }

  const std::string& hash() const { return hash_; }

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir_ / name).string());
    return out;
  }

  void close(std::ofstream& out, const std::string& name) {
    out.close();
    if (!out) throw IoError("failed writing " + (dir_ / name).string());
    result_.files.push_back(dir_ / name);
  }

  void csv(const std::string& name, const std::string& body) {
    auto out = open(name);
    out << "# config " << hash_ << "\n" << body;
    close(out, name);
  }

  void json(const std::string& name, ojson body) {
    ojson j;
    j["config_hash"] = hash_;
    for (auto& [key, value] : body.items()) j[key] = value;
    auto out = open(name);
    out << j.dump(2) << "\n";
    close(out, name);
  }

  void text(const std::string& name, const std::string& body) {
    auto out = open(name);
    out << body;
    close(out, name);
  }

  SvgOptions svg(std::string title) const {
    SvgOptions o;
    o.title = std::move(title);
    o.config_hash = hash_;
    o.timestamp = config_.timestamp;
    return o;
  }

 private:
  const ExperimentConfig& config_;
  fs::path dir_;
  std::string hash_;
  CommandResult& result_;
};

const Schedule& need_schedule(const Source& src, const char* command) {
  require(src.schedule.has_value(), std::string(command) + " needs a construction schedule, not an input file");
  return *src.schedule;
}

}  // namespace

CommandResult cmd_generate(const ExperimentConfig& c) {
  Source src = load_source(c);
  const Schedule& s = need_schedule(src, "generate");
  CommandResult res;
  Output out(c, res);

  std::ostringstream sched;
  sched << "k,a,h,n,a_double,h_double\n";
  for (int k = 1; k <= s.k_max(); ++k)
    sched << k << ',' << format_rational(s.a_at(k)) << ',' << format_rational(s.h_at(k)) << ','
          << s.n_at(k).get_str() << ',' << num(s.a_d(k)) << ',' << num(s.h_d(k)) << '\n';
  out.csv("schedule.csv", sched.str());

  constexpr std::size_t kFileLimit = 200'000, kFigureLimit = 20'000;
  std::ostringstream gens;
  gens << "k,count,recurrence,total_mass,min_length,max_length\n";
  ojson stats = ojson::array();
  std::vector<std::vector<WeightedSegment>> figure;
  std::vector<WeightedSegment> current{WeightedSegment({0, 0}, {1, 0}, 1)};
  bool enumerable = true;
  Integer previous = 1;
  for (int k = 0; k <= src.generation; ++k) {
    GenerationStats st = generation_stats(s, k);
    bool recurrence = k == 0 ? st.count == 1 : st.count == 2 * s.n_at(k) * previous;
    previous = st.count;
    gens << k << ',' << st.count.get_str() << ',' << (recurrence ? 1 : 0) << ',' << format_rational(st.total_mass)
         << ',' << format_rational(st.min_length) << ',' << format_rational(st.max_length) << '\n';
    stats.push_back({{"k", k},
                     {"count", st.count.get_str()},
                     {"recurrence", recurrence},
                     {"total_mass", format_rational(st.total_mass)}});
    if (enumerable && k > 0) {
      if (st.count <= kFileLimit)
        current = refine(current, k - 1, s, kFileLimit);
      else
        enumerable = false;
    }
    if (!enumerable) continue;
    ensure(Integer(static_cast<unsigned long>(current.size())) == st.count, "enumeration disagrees with the count");
    std::ostringstream body;
    body << "# config " << out.hash() << "\n";
    write_measure(body, SegmentMeasure(current, k));
    out.text("E_" + std::to_string(k) + ".txt", body.str());
    if (current.size() <= kFigureLimit) figure.push_back(current);
  }
  out.csv("generations.csv", gens.str());

  ScheduleCheck check = check_schedule(s);
  ojson summary;
  summary["flavor"] = c.flavor;
  summary["generation"] = src.generation;
  summary["faithful"] = check.faithful();
  summary["check_failures"] = check.failures;
  summary["generations"] = stats;
  out.json("generate.json", summary);

  auto svg = out.open("generations.svg");
  write_generations_svg(svg, figure, out.svg("Generations E_0 to E_" + std::to_string(figure.size() - 1)));
  out.close(svg, "generations.svg");
  return res;
}

CommandResult cmd_beta(const ExperimentConfig& c) {
  Source src = load_source(c);
  ScaleGrid grid = scale_grid(src, c);
  auto points = sample_points(src, c);
  auto radii = grid.radii();
  CommandResult res;
  Output out(c, res);

  std::ostringstream csv;
  write_beta_csv_header(csv);
  std::vector<Curve> curves;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (double p : c.p) {
      auto samples = scale_samples(*src.mu, points[i], radii, p, c.threads);
      Curve curve;
      curve.label = "x" + std::to_string(i) + " p=" + num(p);
      for (const auto& sm : samples) {
        for (BetaVariant v : {BetaVariant::beta, BetaVariant::beta_tilde}) {
          BetaRow row;
          row.x = to_point(points[i]);
          row.r = sm.r;
          row.p = p;
          row.variant = v;
          row.value = v == BetaVariant::beta ? sm.value.beta : sm.value.beta_tilde;
          row.line = sm.value.best_line;
          row.ball_mass = sm.value.ball_mass;
          write_beta_csv_row(csv, row);
        }
        curve.points.push_back({sm.r, sm.value.beta});
      }
      if (curves.size() < 8) curves.push_back(std::move(curve));
    }
  }
  out.csv("beta.csv", csv.str());
  auto svg = out.open("beta.svg");
  write_curves_svg(svg, curves, "r", "beta", false, out.svg("beta against scale"));
  out.close(svg, "beta.svg");
  return res;
}

CommandResult cmd_sqfn(const ExperimentConfig& c) {
  Source src = load_source(c);
  ScaleGrid grid = scale_grid(src, c);
  auto points = sample_points(src, c);
  auto radii = grid.radii();
  CommandResult res;
  Output out(c, res);

  std::ostringstream totals, incs, probes;
  totals << "point,x,y,p,beta_sqfn,tilde_sqfn,scales,empty_scales\n";
  incs << "point,k,p,r_lo,r_hi,scales,beta_sum,beta_norm,tilde_sum,tilde_norm\n";
  probes << "point,k,p,h,probe,probe_norm\n";
  bool windows = src.schedule && src.generation >= 2;
  std::vector<std::vector<double>> mean_beta(c.p.size()), mean_tilde(c.p.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Point x = to_point(points[i]);
    for (std::size_t pi = 0; pi < c.p.size(); ++pi) {
      double p = c.p[pi];
      auto samples = scale_samples(*src.mu, points[i], radii, p, c.threads);
      auto b = square_function(samples, grid.weight(), BetaVariant::beta);
      auto t = square_function(samples, grid.weight(), BetaVariant::beta_tilde);
      totals << i << ',' << num(x.x) << ',' << num(x.y) << ',' << num(p) << ',' << num(b.value) << ','
             << num(t.value) << ',' << b.scales << ',' << t.empty_scales << '\n';
      if (!windows) continue;
      const Schedule& s = *src.schedule;
      auto rows = window_increments(samples, grid.weight(), s, 1, src.generation - 1, p);
      mean_beta[pi].resize(rows.size());
      mean_tilde[pi].resize(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        incs << i << ',' << row.k << ',' << num(p) << ',' << num(row.r_lo) << ',' << num(row.r_hi) << ','
             << row.scales << ',' << num(row.beta_sum) << ',' << num(row.beta_norm) << ',' << num(row.tilde_sum)
             << ',' << num(row.tilde_norm) << '\n';
        mean_beta[pi][r] += row.beta_sum / points.size();
        mean_tilde[pi][r] += row.tilde_sum / points.size();
      }
      for (int k = 1; k < src.generation; ++k) {
        double v = beta_lower_bound_probe(*src.mu, points[i], k, p, s);
        probes << i << ',' << k << ',' << num(p) << ',' << num(s.h_d(k)) << ',' << num(v) << ','
               << num(v / std::pow(s.a_d(k), 1.0 / p)) << '\n';
      }
    }
  }
  out.csv("sqfn.csv", totals.str());
  if (windows) {
    out.csv("increments.csv", incs.str());
    out.csv("probes.csv", probes.str());
    std::vector<Curve> curves;
    for (std::size_t pi = 0; pi < c.p.size(); ++pi) {
      Curve b{"beta p=" + num(c.p[pi]), {}}, t{"tilde p=" + num(c.p[pi]), {}};
      for (std::size_t r = 0; r < mean_beta[pi].size(); ++r) {
        double h = src.schedule->h_d(static_cast<int>(r) + 1);
        b.points.push_back({h, mean_beta[pi][r]});
        t.points.push_back({h, mean_tilde[pi][r]});
      }
      curves.push_back(std::move(b));
      curves.push_back(std::move(t));
    }
    auto svg = out.open("increments.svg");
    write_curves_svg(svg, curves, "h_k", "mean window increment", true, out.svg("square function increments"));
    out.close(svg, "increments.svg");
  }
  return res;
}

CommandResult cmd_witness(const ExperimentConfig& c) {
  Source src = load_source(c);
  const Schedule& s = need_schedule(src, "witness");
  require(src.generation >= 2, "witness needs generation >= 2");
  CommandResult res;
  Output out(c, res);
  std::mt19937_64 rng(c.seed);
  std::ostringstream csv;
  csv << "point,k,h,a,r,ratio,ratio_over_a\n";
  std::vector<Curve> curves;
  for (int i = 0; i < c.samples; ++i) {
    PointAddress x = sample_point_with_branches(s, src.generation, 1, src.generation - 1, Branch::up, rng);
    auto rows = unrectifiability_witness(*src.mu, s, x, 1, src.generation - 1);
    Curve curve{"x" + std::to_string(i), {}};
    for (const auto& row : rows) {
      csv << i << ',' << row.k << ',' << num(row.h) << ',' << num(row.a) << ',' << num(row.r) << ','
          << num(row.ratio) << ',' << num(row.ratio / row.a) << '\n';
      curve.points.push_back({row.r, row.ratio});
    }
    if (curves.size() < 8) curves.push_back(std::move(curve));
  }
  out.csv("witness.csv", csv.str());
  auto svg = out.open("witness.svg");
  write_curves_svg(svg, curves, "r = h_k/2", "density ratio", true, out.svg("density at r = h_k/2 on U_k"));
  out.close(svg, "witness.svg");
  return res;
}

namespace {

std::string packing_rows(const CoronaTree& tree, const Lattice& lat, const AtomicMeasure& mu,
                         const ExperimentConfig& c) {
  std::ostringstream csv;
  write_packing_csv_header(csv);
  for (double lambda : {c.lambda, std::sqrt(c.lambda)}) {
    PackingOptions po;
    po.grid = packing_grid(lat, lambda);
    po.max_points = c.max_points;
    po.threads = c.threads;
    write_packing_csv_row(csv, lambda, packing_report(tree, lat, mu, po));
  }
  return csv.str();
}

std::string lattice_rows(const Lattice& lat) {
  std::ostringstream csv;
  csv << "level,cubes,radius,side_length,min_mass,max_mass\n";
  for (int k = 0; k <= lat.options.depth; ++k) {
    double lo = INFINITY, hi = 0;
    for (std::size_t id : lat.levels[k]) {
      lo = std::min(lo, lat.cubes[id].mass);
      hi = std::max(hi, lat.cubes[id].mass);
    }
    csv << k << ',' << lat.levels[k].size() << ',' << num(lat.level_radius(k)) << ',' << num(lat.side_length(k))
        << ',' << num(lo) << ',' << num(hi) << '\n';
  }
  return csv.str();
}

ojson corona_json(const CoronaTree& tree, const Lattice& lat, const AtomicMeasure& mu) {
  std::ostringstream raw;
  write_corona_json(raw, tree, lat, check_corona(tree, lat, mu));
  ojson j = ojson::parse(raw.str());
  j["maximal_constant"] = maximal_via_corona(tree, lat, mu).constant;
  return j;
}

}  // namespace

CommandResult cmd_corona(const ExperimentConfig& c) {
  Source src = load_source(c);
  double spacing = 0;
  AtomicMeasure mu = atomic_source(src, c, spacing);
  Lattice lat = build_lattice(mu, {c.a0, c.c0, c.depth});
  CoronaTree tree = corona_decompose(lat, mu, c.c_thr);
  CommandResult res;
  Output out(c, res);
  ojson j = corona_json(tree, lat, mu);
  j["atoms"] = mu.size();
  j["spacing"] = spacing;
  out.json("corona.json", j);
  out.csv("lattice.csv", lattice_rows(lat));
  out.csv("packing.csv", packing_rows(tree, lat, mu, c));
  return res;
}

CommandResult cmd_approx(const ExperimentConfig& c) {
  Source src = load_source(c);
  double spacing = 0;
  AtomicMeasure mu = atomic_source(src, c, spacing);
  double rho = c.rho > 0 ? c.rho : 0.02 * src.extent;
  ScaleGrid grid{rho, c.r_max > 0 ? c.r_max : src.extent, c.lambda};
  require(grid.r_min < grid.r_max, "rho must be below r_max");

  // Sample points by stride over the atoms.
  std::vector<Point> points;
  std::size_t m = std::min<std::size_t>(mu.size(), static_cast<std::size_t>(c.samples));
  for (std::size_t i = 0; i < m; ++i) points.push_back(mu.atoms()[i * mu.size() / m].position);
  double c_star = c.c_star > 0 ? c.c_star : estimate_c_star(mu, points, grid);
  require(c_star > 0, "estimated C_* vanished; set c_star");

  MuTildeOptions o;
  o.big_lambda = c.big_lambda;
  o.rho = rho;
  o.epsilon = c.epsilon;
  o.c_star = c_star;
  o.lambda = c.lambda;
  MuTilde tilde = build_mu_tilde(mu, o);

  CommandResult res;
  Output out(c, res);
  std::ostringstream balls;
  balls << "ball,x,y,radius,mass,dilated_mass,exact_mass,doubling,density\n";
  bool all_pass = true, all_exact = true;
  for (std::size_t i = 0; i < tilde.balls.size(); ++i) {
    const auto& b = tilde.balls[i];
    bool exact = tilde.measure.segments()[i].mass() == rational_from_double(b.mass);
    auto t = doubling_test(mu, b.center, b.radius, o.big_lambda, o.c_star);
    all_pass = all_pass && t.passes();
    all_exact = all_exact && exact;
    balls << i << ',' << num(b.center.x) << ',' << num(b.center.y) << ',' << num(b.radius) << ',' << num(b.mass)
          << ',' << num(b.dilated_mass) << ',' << (exact ? 1 : 0) << ',' << (t.doubling ? 1 : 0) << ','
          << (t.density ? 1 : 0) << '\n';
  }
  out.csv("balls.csv", balls.str());
  std::ostringstream measure;
  measure << "# config " << out.hash() << "\n";
  write_measure(measure, tilde.measure);
  out.text("mu_tilde.txt", measure.str());

  auto cmp = compare_maximal(mu, tilde, ScaleGrid{rho, 2 * src.extent, c.lambda}.radii(), 4, c.max_points);
  std::ostringstream transfer;
  transfer << "x,y,tilde_square,mu_square,correction,ratio\n";
  for (const auto& r : beta_transfer(mu, tilde, grid, static_cast<std::size_t>(c.samples), c.threads))
    transfer << num(r.x.x) << ',' << num(r.x.y) << ',' << num(r.tilde_square) << ',' << num(r.mu_square) << ','
             << num(r.correction) << ',' << num(r.ratio) << '\n';
  out.csv("transfer.csv", transfer.str());

  // Packing on mu tilde, cut into atoms at a tenth of rho.
  AtomicMeasure tilde_atoms = atomize(tilde.measure, rho / 10);
  Lattice lat = build_lattice(tilde_atoms, {c.a0, c.c0, c.depth});
  CoronaTree tree = corona_decompose(lat, tilde_atoms, c.c_thr);
  out.csv("tilde_packing.csv", packing_rows(tree, lat, tilde_atoms, c));

  ojson j;
  j["atoms"] = mu.size();
  j["spacing"] = spacing;
  j["c_star"] = c_star;
  j["rho"] = rho;
  j["big_lambda"] = o.big_lambda;
  j["epsilon"] = o.epsilon;
  j["rounds"] = tilde.rounds;
  j["balls"] = tilde.balls.size();
  j["total_mass"] = tilde.total_mass;
  j["covered_mass"] = tilde.covered_mass;
  j["all_pass"] = all_pass;
  j["exact_masses"] = all_exact;
  j["maximal"] = {{"lhs", cmp.lhs}, {"rhs", cmp.rhs}, {"ratio", cmp.ratio}, {"points", cmp.points}};
  out.json("approx.json", j);
  return res;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"generate", "beta", "sqfn", "witness", "corona", "approx"};
  return names;
}

CommandResult run_command(const std::string& name, const ExperimentConfig& c) {
  if (name == "generate") return cmd_generate(c);
  if (name == "beta") return cmd_beta(c);
  if (name == "sqfn") return cmd_sqfn(c);
  if (name == "witness") return cmd_witness(c);
  if (name == "corona") return cmd_corona(c);
  if (name == "approx") return cmd_approx(c);
  throw InvalidArgument("unknown command '" + name + "'");
}

std::string schema_markdown() {
  return R"(# Output schema

Every command writes `config.json` (the configuration and its hash) and this
file into the output directory. CSV files start with a `# config <hash>`
line, JSON files carry a `config_hash` field, measure files start with a
`# config <hash>` comment and SVG files with a `<!-- config <hash> -->`
comment. The hash is FNV-1a (64 bit, hex) over the canonical JSON of every
configuration field except `out_dir`, `timestamp` and `threads`.

Numbers are printed with 17 significant digits. Exact values are written as
`num/den` rationals. `nan` marks an undefined beta tilde (empty ball).

## generate

`schedule.csv`: `k` generation; `a`, `h`, `n` exact parameters; `a_double`,
`h_double` their double values.

`generations.csv`: `k`; `count` number of segments m_k; `recurrence` 1 when
m_k = 2 n_k m_{k-1} (m_0 = 1); `total_mass` exact mass of E_k;
`min_length`, `max_length` exact segment lengths.

`generate.json`: `flavor`, `generation`, `faithful` (all schedule
constraints hold), `check_failures`, `generations` (k, count, recurrence,
total_mass).

`E_<k>.txt`: the measure of generation k as `S x0 y0 x1 y1 density` records,
written while m_k <= 200000.

`generations.svg`: one panel per generation, up to 20000 segments each.

## beta

`beta.csv`: `x`, `y` sample point; `r` radius; `p`; `variant` (`beta` or
`beta_tilde`); `beta` value; `phi`, `c` best line {y : y . (cos phi, sin phi) = c};
`ball_mass` mu(B(x, r)).

`beta.svg`: beta against r (log scale) for up to eight point and p pairs.

## sqfn

`sqfn.csv`: `point` index; `x`, `y`; `p`; `beta_sqfn` and `tilde_sqfn`, the
sums of beta^2 ln(1/lambda) over the grid r_max lambda^m >= r_min;
`scales` grid size; `empty_scales` radii with an empty ball.

`increments.csv` (construction only): `point`; `k`; `p`; `r_lo` = h_{k+1}
and `r_hi` = h_k / 2, the window r_lo < r <= r_hi; `scales` grid radii in
it; `beta_sum` window sum; `beta_norm` = beta_sum / a_{k+1}^{2/p};
`tilde_sum`; `tilde_norm` = tilde_sum / (h_{k+1} + a_{k+1}^{2/p}).

`probes.csv` (construction only): `point`; `k`; `p`; `h` = h_k; `probe` the
minimum of beta over nine radii in [2 h_k, 4 h_k]; `probe_norm` =
probe / a_k^{1/p}.

`increments.svg`: mean window sums against h_k.

## witness

`witness.csv`: `point` index of a sample taking the up branch at every
generation; `k`; `h` = h_k; `a` = a_k; `r` = h_k / 2; `ratio` =
mu_j(B(x, r)) / (2r); `ratio_over_a` = ratio / a_k.

`witness.svg`: ratio against r.

## corona

The measure is cut into atoms no further apart than `spacing`.

`corona.json`: `c_thr`, `a0`, `c0`, `depth`, `unit` (lattice length unit),
`cubes` count; `roots` with `cube` id, `level`, `center`, `radius` r(Q),
`mass` mu(R), `theta` = mu(B(z, 56 r)) / (56 r), `tree_size`; `check` with
`disjoint_union`, `root_in_top`, `density_control` (max Theta ratio to the
tree root), `root_mass_ratio` (max mu(2B_R) / mu(R)), `deepest_level`,
`deepest_density_gap`; `maximal_constant` (max over atoms of the direct
maximal function over the corona bound); `atoms`; `spacing`.

`lattice.csv`: `level`; `cubes`; `radius` r(Q); `side_length` 56 C0 r;
`min_mass`, `max_mass` of the level's cubes.

`packing.csv`: one row per radius ratio (lambda and sqrt(lambda)):
`lambda`; `roots`; `lhs` = sum of Theta(2B_R) mu(R); `c_star` the largest
Theta below the root; `rhs_mass` = c_star mu(E); `rhs_beta` sampled integral
of the p = 2 square function; `ratio` = lhs / (rhs_mass + rhs_beta);
`beta_points` atoms used for rhs_beta.

## approx

`balls.csv`: `ball` index; `x`, `y` center; `radius`; `mass` mu(B);
`dilated_mass` mu(big_lambda B); `exact_mass` 1 when the disk segment's
rational mass equals `mass`; `doubling` 1 when
mu(big_lambda B) <= 2 big_lambda^2 mu(B); `density` 1 when
mu(B) <= 10 C_* big_lambda r.

`mu_tilde.txt`: the approximating measure, one horizontal segment of length
r per ball.

`transfer.csv`: `x`, `y` ball center; `tilde_square` sum of beta_2 of mu
tilde squared; `mu_square` the same for mu at 20 r; `correction` the
overlap term sum 4 r_j^2 mu(B_j) / r^3; `ratio` = tilde_square /
(mu_square + correction).

`tilde_packing.csv`: as `packing.csv`, for mu tilde cut into atoms at
rho / 10.

`approx.json`: `atoms`, `spacing`, `c_star`, `rho`, `big_lambda`,
`epsilon`, `rounds`, `balls`, `total_mass`, `covered_mass`, `all_pass`,
`exact_masses`, `maximal` (`lhs`, `rhs`, `ratio`, `points`).
)";
}

}  // namespace betacantor
