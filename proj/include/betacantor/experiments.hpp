#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "betacantor/beta.hpp"
#include "betacantor/construction.hpp"
#include "betacantor/measure.hpp"
#include "json.hpp"

namespace betacantor {

// File system failures while writing results.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string flavor = "thm11";     // thm11, thm12, tame or custom
  std::vector<std::string> a, h, n;  // custom schedule, exact rationals and integers
  int k_max = 3;
  int generation = 0;  // j of mu_j; 0 means k_max
  std::vector<double> p{2.0};
  int samples = 10;
  double lambda = 0.8408964152537145;
  double r_min = 0.0;  // 0 picks a default from the measure
  double r_max = 0.0;
  std::uint64_t seed = 1;
  double merge_tolerance = 1e-2;
  std::string input;  // measure file replacing the construction

  double a0 = 50.0;
  double c0 = 10.0;
  double c_thr = 2.0;
  int depth = 1;
  double spacing = 0.0;  // atomization spacing; 0 picks a tenth of the finest radius
  std::size_t max_points = 256;

  double big_lambda = 100.0;
  double rho = 0.0;  // 0 picks 2% of the support diameter
  double epsilon = 0.25;
  double c_star = 0.0;  // 0 estimates it from the sample points

  // Not part of the hash: where and how results are written.
  std::string out_dir = "out";
  bool timestamp = true;
  unsigned threads = 0;

  void validate() const;
};

// Canonical form, with every hashed field in a fixed order.
nlohmann::ordered_json config_to_json(const ExperimentConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const ExperimentConfig& c);

Schedule make_schedule(const ExperimentConfig& c);
int measure_generation(const ExperimentConfig& c);

// Point addresses drawn from mu_j, reproducible from the seed.
std::vector<PointAddress> sample_addresses(const Schedule& s, int j, int count, std::uint64_t seed);

struct IncrementRow {
  int k = 0;
  double p = 2.0;
  double r_lo = 0.0;  // h_{k+1}, excluded
  double r_hi = 0.0;  // h_k / 2
  double beta_sum = 0.0;
  double beta_norm = 0.0;   // beta_sum / a_{k+1}^{2/p}
  double tilde_sum = 0.0;
  double tilde_norm = 0.0;  // tilde_sum / (h_{k+1} + a_{k+1}^{2/p})
  std::size_t scales = 0;
};

// Window sums over the samples with h_{k+1} < r <= h_k / 2, for k_lo <= k <= k_hi.
std::vector<IncrementRow> window_increments(const std::vector<ScaleSample>& samples, double weight,
                                            const Schedule& s, int k_lo, int k_hi, double p);

struct CommandResult {
  std::vector<std::filesystem::path> files;
};

CommandResult cmd_generate(const ExperimentConfig& c);
CommandResult cmd_beta(const ExperimentConfig& c);
CommandResult cmd_sqfn(const ExperimentConfig& c);
CommandResult cmd_witness(const ExperimentConfig& c);
CommandResult cmd_corona(const ExperimentConfig& c);
CommandResult cmd_approx(const ExperimentConfig& c);

// Dispatch by subcommand name.
CommandResult run_command(const std::string& name, const ExperimentConfig& c);
const std::vector<std::string>& command_names();

// Column documentation for every file the commands write.
std::string schema_markdown();

}  // namespace betacantor
