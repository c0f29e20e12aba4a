#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modreb/generator.hpp"
#include "modreb/network.hpp"

namespace modreb {

struct SweepConfig {
  std::vector<int> sizes{10, 25, 50, 100, 200};
  int trials_per_size = 20;
  std::uint64_t base_seed = 1;
  std::vector<double> f_values{1.0, 2.0, 3.0, 4.0};
  GeneratorConfig generator;
  /// Worker threads; 0 uses std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Throws ValidationError on sizes < 2, trials < 1 or negative f values.
void validate(const SweepConfig& config);

/// base_seed * 10000 + n * 100 + trial.
std::uint64_t trial_seed(std::uint64_t base_seed, int n, int trial);

struct TrialRecord {
  std::string group_key;
  int trial = 0;
  std::uint64_t seed = 0;
  int n = 0;
  double f = 1.0;
  double v_alpha = 0.0;
  double r_alpha_beta = 0.0;
  double ratio = 0.0;         // R / V
  double reb_fraction = 0.0;  // sum T alpha / R
  double objective_alpha = 0.0;
  double objective_beta = 0.0;
  double customer_in_transit = 0.0;  // sum T_ij p_ij lambda_i
  double alpha_residual = 0.0;       // ||net_outflow(alpha) - D||_inf
  double beta_residual = 0.0;        // ||net_outflow(beta) + D||_inf
  double capacity_excess = 0.0;      // max_ij beta_ij - f_ij lambda_i p_ij
};

struct GroupSummary {
  std::string group_key;
  std::string metric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SweepReport {
  std::vector<TrialRecord> rows;
  std::vector<GroupSummary> summary;

  /// Rows of one group, in trial order.
  std::vector<TrialRecord> group(const std::string& key) const;
  const GroupSummary& stat(const std::string& key, const std::string& metric) const;
};

/// A trial's beta program was infeasible; the sweep stops.
class SweepAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using InstanceFactory = std::function<StationNetwork(int n, std::uint64_t seed)>;

/// One group per size ("n=<size>"), trials_per_size instances each. Instances come
/// from generate_instance with config.generator unless `factory` is given.
SweepReport run_station_sweep(const SweepConfig& config, const InstanceFactory& factory = {});

/// Needs exactly one size. The same trials_per_size instances are solved at every
/// f in config.f_values (group "f=<value>").
SweepReport run_f_sweep(const SweepConfig& config, const InstanceFactory& factory = {});

std::string report_csv(const SweepReport& report);
std::string summary_csv(const SweepReport& report);

/// Writes report.csv, summary.csv and one gnuplot data file per metric
/// (<prefix>_<metric>.dat with columns x mean min max) into `dir`.
void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir, const std::string& prefix);

}  // namespace modreb
