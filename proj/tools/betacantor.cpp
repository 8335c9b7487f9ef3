// Command line front end: one subcommand per experiment.

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "betacantor/error.hpp"
#include "betacantor/experiments.hpp"

using namespace betacantor;

namespace {

// Options are bound to a scratch config and copied over the base config
// (defaults or --config file) only when given, so flags override the file.
struct Binder {
  ExperimentConfig scratch;
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> given;

  template <class T>
  void add(CLI::App* app, const std::string& name, T ExperimentConfig::*field, const std::string& help) {
    auto* opt = app->add_option(name, scratch.*field, help);
    given.push_back({opt, [this, field](ExperimentConfig& c) { c.*field = scratch.*field; }});
  }

  void apply(ExperimentConfig& c) const {
    for (const auto& [opt, copy] : given)
      if (opt->count() > 0) copy(c);
  }
};

void add_options(CLI::App* app, Binder& b, std::string& config_file, bool& no_timestamp) {
  app->add_option("--config", config_file, "JSON config file; flags override its values");
  b.add(app, "--flavor", &ExperimentConfig::flavor, "thm11, thm12, tame or custom");
  b.add(app, "--a-k", &ExperimentConfig::a, "custom a_k list (exact rationals)");
  b.add(app, "--h-k", &ExperimentConfig::h, "custom h_k list (exact rationals)");
  b.add(app, "--n-k", &ExperimentConfig::n, "custom n_k list (integers)");
  b.add(app, "--k-max", &ExperimentConfig::k_max, "schedule length");
  b.add(app, "--generation", &ExperimentConfig::generation, "generation j of mu_j (0: k-max)");
  b.add(app, "--p", &ExperimentConfig::p, "exponents p >= 1");
  b.add(app, "--samples", &ExperimentConfig::samples, "number of sample points");
  b.add(app, "--lambda", &ExperimentConfig::lambda, "radius grid ratio in (0, 1)");
  b.add(app, "--r-min", &ExperimentConfig::r_min, "smallest radius (0: default)");
  b.add(app, "--r-max", &ExperimentConfig::r_max, "largest radius (0: default)");
  b.add(app, "--seed", &ExperimentConfig::seed, "random seed");
  b.add(app, "--merge-tolerance", &ExperimentConfig::merge_tolerance, "merge runs spaced below this fraction of r");
  b.add(app, "--input", &ExperimentConfig::input, "measure file replacing the construction");
  b.add(app, "--a0", &ExperimentConfig::a0, "lattice scale ratio A0 (> 28)");
  b.add(app, "--c0", &ExperimentConfig::c0, "lattice size constant C0 (>= 1)");
  b.add(app, "--c-thr", &ExperimentConfig::c_thr, "corona density threshold (> 1)");
  b.add(app, "--depth", &ExperimentConfig::depth, "lattice depth");
  b.add(app, "--spacing", &ExperimentConfig::spacing, "atomization spacing (0: default)");
  b.add(app, "--max-points", &ExperimentConfig::max_points, "points used for sampled sums");
  b.add(app, "--big-lambda", &ExperimentConfig::big_lambda, "dilation factor of the doubling test");
  b.add(app, "--rho", &ExperimentConfig::rho, "largest ball radius for mu tilde (0: default)");
  b.add(app, "--epsilon", &ExperimentConfig::epsilon, "allowed uncovered mass fraction");
  b.add(app, "--c-star", &ExperimentConfig::c_star, "density constant C_* (0: estimate)");
  b.add(app, "--out", &ExperimentConfig::out_dir, "output directory");
  b.add(app, "--threads", &ExperimentConfig::threads, "worker threads (0: all cores)");
  app->add_flag("--no-timestamp", no_timestamp, "omit the generation time from SVG files");
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beta numbers, square functions and densities of Cantor-type constructions"};
  app.require_subcommand(1);
  Binder binder;
  std::string config_file;
  bool no_timestamp = false;
  const std::map<std::string, std::string> about{
      {"generate", "schedule, segment counts, measure files and a figure of the generations"},
      {"beta", "beta and beta tilde over a radius grid at sampled points"},
      {"sqfn", "square functions, window increments and lower-bound probes"},
      {"witness", "density ratios at r = h_k/2 at points taking the up branch"},
      {"corona", "lattice, corona decomposition and packing sums"},
      {"approx", "doubling-ball approximation with maximal and beta comparisons"}};
  for (const auto& name : command_names())
    add_options(app.add_subcommand(name, about.at(name)), binder, config_file, no_timestamp);
  app.add_subcommand("schema", "print the output column documentation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::invalid_config);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub->get_name() == "schema") {
      std::cout << schema_markdown();
      return 0;
    }
    ExperimentConfig c = load_config(config_file);
    binder.apply(c);
    if (no_timestamp) c.timestamp = false;
    c.validate();
    auto result = run_command(sub->get_name(), c);
    for (const auto& f : result.files) std::cout << f.string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
