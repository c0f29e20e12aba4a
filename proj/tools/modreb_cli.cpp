// modreb: generate instances, solve the rebalancing programs, probe stability
// and run the parameter sweeps from the command line.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "modreb/errors.hpp"
#include "modreb/experiments.hpp"
#include "modreb/fluidsim.hpp"
#include "modreb/generator.hpp"
#include "modreb/io.hpp"
#include "modreb/network.hpp"
#include "modreb/rebalancer.hpp"

namespace fs = std::filesystem;
using namespace modreb;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitInsufficientFleet = 4;

struct GenArgs {
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
  GeneratorConfig config;
};

struct SolveArgs {
  std::string instance;
  std::string out;
};

struct SimulateArgs {
  std::string instance;
  std::string assignment;
  std::optional<double> fleet;
  std::optional<double> drivers;
  double h = 0.05;
  double horizon = 0.0;
  double perturbation = 0.1;
  std::uint64_t seed = 1;
  std::string trace_out;
};

struct SweepArgs {
  std::string config;
  std::string out_dir;
  unsigned threads = 0;
};

std::string set_text(const std::vector<int>& stations) {
  std::ostringstream out;
  out << '{';
  for (std::size_t k = 0; k < stations.size(); ++k) out << (k ? "," : "") << stations[k] + 1;
  out << '}';
  return out.str();
}

int run_gen(const GenArgs& args) {
  const StationNetwork net = generate_instance(args.n, args.seed, args.config);
  save_instance(args.out, net);
  std::cout << "wrote " << args.out << " (n=" << args.n << ", seed=" << args.seed << ")\n";
  return 0;
}

int run_solve(const SolveArgs& args) {
  const StationNetwork net = load_instance(args.instance);
  const RebalanceSolution solution = solve_rebalancing(net);
  if (solution.status == RebalanceStatus::beta_infeasible) {
    std::cerr << "beta program infeasible";
    if (solution.infeasibility) {
      std::cerr << ": max flow " << solution.infeasibility->max_flow << " < required "
                << solution.infeasibility->total_supply;
    }
    std::cerr << '\n';
    if (net.size() <= kBruteForceMaxStations) {
      const CutCheck cut = check_feasibility_bruteforce(net, compute_imbalance(net));
      if (!cut.feasible) {
        std::cerr << "violating cut S=" << set_text(cut.witness) << " (excess " << cut.violation << ")\n";
      }
    }
    return kExitInfeasible;
  }
  Json meta = {{"instance", args.instance}};
  if (net.meta.seed) meta["instance_seed"] = *net.meta.seed;
  save_assignment(args.out, solution, meta);
  const double v = solution.assignment.v_alpha;
  const double r = solution.assignment.r_alpha_beta;
  std::cout << std::setprecision(10) << "V_alpha=" << v << " R=" << r << " ratio=" << (v > 0.0 ? r / v : 0.0)
            << '\n';
  return 0;
}

int run_simulate(const SimulateArgs& args) {
  const StationNetwork net = load_instance(args.instance);
  const RebalanceSolution solution = assignment_from_json(read_json(args.assignment));
  validate(solution.assignment, net);

  StabilityOptions options;
  options.h = args.h;
  options.horizon = args.horizon;
  options.perturbation = args.perturbation;
  options.seed = args.seed;
  const double fleet = args.fleet.value_or(solution.assignment.v_alpha * (1.0 + options.slack_v));
  const double drivers = args.drivers.value_or(solution.assignment.r_alpha_beta * (1.0 + options.slack_r));

  StabilityReport report;
  try {
    report = stability_probe_totals(net, solution, fleet, drivers, options);
  } catch (const InsufficientFleet& e) {
    std::cerr << "rejected: " << e.what() << '\n';
    return kExitInsufficientFleet;
  }

  if (!args.trace_out.empty()) {
    const fs::path trace_path(args.trace_out);
    write_text(trace_path, trace_csv(report.trace));
    Json meta = {{"instance", args.instance},
                 {"assignment", args.assignment},
                 {"V", fleet},
                 {"R", drivers},
                 {"h", options.h},
                 {"horizon", report.trace.horizon},
                 {"perturbation", options.perturbation},
                 {"seed", options.seed},
                 {"v_alpha", solution.assignment.v_alpha},
                 {"r_alpha_beta", solution.assignment.r_alpha_beta},
                 {"pass", report.pass},
                 {"customers_cleared", report.customers_cleared},
                 {"vehicles_positive", report.vehicles_positive},
                 {"drivers_positive", report.drivers_positive},
                 {"conserved", report.conserved},
                 {"drain_bound", report.drain_bound},
                 {"drain_time", report.drain_time},
                 {"vehicle_drift", report.vehicle_drift},
                 {"driver_drift", report.driver_drift},
                 {"drift_tolerance", report.drift_tolerance}};
    fs::path meta_path = trace_path;
    meta_path.replace_extension(".meta.json");
    write_text(meta_path, meta.dump(2) + "\n");
  }

  std::cout << std::setprecision(6) << "stability " << (report.pass ? "PASS" : "FAIL")
            << ": customers_cleared=" << report.customers_cleared
            << " vehicles_positive=" << report.vehicles_positive
            << " drivers_positive=" << report.drivers_positive << " conserved=" << report.conserved
            << " drain_time=" << report.drain_time << " vehicle_drift=" << report.vehicle_drift
            << " driver_drift=" << report.driver_drift << '\n';
  return report.pass ? 0 : 1;
}

SweepConfig load_sweep_config(const std::string& path, unsigned threads) {
  const Json doc = read_json(path);
  SweepConfig config;
  try {
    if (doc.contains("sizes")) config.sizes = doc.at("sizes").get<std::vector<int>>();
    if (doc.contains("trials_per_size")) config.trials_per_size = doc.at("trials_per_size").get<int>();
    if (doc.contains("base_seed")) config.base_seed = doc.at("base_seed").get<std::uint64_t>();
    if (doc.contains("f_values")) config.f_values = doc.at("f_values").get<std::vector<double>>();
    if (doc.contains("generator")) config.generator = generator_config_from_json(doc.at("generator"));
    if (doc.contains("threads")) config.threads = doc.at("threads").get<unsigned>();
  } catch (const Json::exception& e) {
    throw ValidationError("config", e.what());
  }
  if (threads != 0) config.threads = threads;
  return config;
}

Json sweep_config_json(const SweepConfig& config) {
  return {{"sizes", config.sizes},
          {"trials_per_size", config.trials_per_size},
          {"base_seed", config.base_seed},
          {"f_values", config.f_values},
          {"generator", to_json(config.generator)}};
}

int run_sweep(const SweepArgs& args, bool f_sweep) {
  const SweepConfig config = load_sweep_config(args.config, args.threads);
  const SweepReport report = f_sweep ? run_f_sweep(config) : run_station_sweep(config);
  const fs::path dir(args.out_dir);
  write_sweep_outputs(report, dir, f_sweep ? "fsweep" : "sweep");
  write_text(dir / "config.json", sweep_config_json(config).dump(2) + "\n");
  std::cout << std::setprecision(6);
  for (const GroupSummary& s : report.summary) {
    if (s.metric == "v_alpha") std::cout << s.group_key;
    std::cout << ' ' << s.metric << '=' << s.mean;
    if (s.metric == "reb_fraction") std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluid-model rebalancing of vehicles and drivers"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random Euclidean instance");
  gen_cmd->add_option("--n", gen.n, "Number of stations")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--out", gen.out, "Instance file to write")->required();
  gen_cmd->add_option("--env-size", gen.config.env_size, "Side of the square environment");
  gen_cmd->add_option("--lambda-max", gen.config.lambda_max, "Upper bound of arrival rates");
  gen_cmd->add_option("--f", gen.config.f_value, "Driver willingness factor f_ij");
  gen_cmd->add_option("--mu-factor", gen.config.mu_factor, "mu_i = mu_factor * lambda_i");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve both rebalancing programs");
  solve_cmd->add_option("--instance", solve.instance, "Instance file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", solve.out, "Assignment file to write")->required();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the fluid model from a perturbed equilibrium");
  sim_cmd->add_option("--instance", sim.instance, "Instance file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--assignment", sim.assignment, "Assignment file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--V", sim.fleet, "Total vehicles (default 1.2 V_alpha)");
  sim_cmd->add_option("--R", sim.drivers, "Total drivers (default 1.2 R)");
  sim_cmd->add_option("--h", sim.h, "Step size")->capture_default_str();
  sim_cmd->add_option("--horizon", sim.horizon, "Simulated time (0 = automatic)")->capture_default_str();
  sim_cmd->add_option("--perturbation", sim.perturbation, "Initial disturbance size")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Seed of the initial disturbance")->capture_default_str();
  sim_cmd->add_option("--trace-out", sim.trace_out, "Trace CSV (metadata goes next to it)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Station-count sweep");
  auto* fsweep_cmd = app.add_subcommand("fsweep", "Willingness-factor sweep at a fixed size");
  for (auto* cmd : {sweep_cmd, fsweep_cmd}) {
    cmd->add_option("--config", sweep.config, "Sweep configuration JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", sweep.out_dir, "Directory for report files")->required();
    cmd->add_option("--threads", sweep.threads, "Worker threads (0 = config or all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*solve_cmd) return run_solve(solve);
    if (*sim_cmd) return run_simulate(sim);
    if (*sweep_cmd) return run_sweep(sweep, false);
    if (*fsweep_cmd) return run_sweep(sweep, true);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InsufficientFleet& e) {
    std::cerr << "rejected: " << e.what() << '\n';
    return kExitInsufficientFleet;
  } catch (const SweepAborted& e) {
    std::cerr << "sweep aborted: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
