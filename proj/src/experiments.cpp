#include "modreb/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "modreb/io.hpp"
#include "modreb/rebalancer.hpp"

namespace modreb {
namespace {

const std::vector<std::string> kMetrics{"v_alpha", "r_alpha_beta", "ratio", "reb_fraction"};

double metric_of(const TrialRecord& r, const std::string& metric) {
  if (metric == "v_alpha") return r.v_alpha;
  if (metric == "r_alpha_beta") return r.r_alpha_beta;
  if (metric == "ratio") return r.ratio;
  return r.reb_fraction;
}

std::string format_number(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

std::string f_key(double f) {
  std::ostringstream out;
  out << "f=" << f;
  return out.str();
}

/// Runs task(i) for i in [0, count) on `threads` workers; rethrows the first failure.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (failure) std::rethrow_exception(failure);
}

TrialRecord record_for(const StationNetwork& net, const ImbalanceVector& d, const AlphaSolution& alpha,
                       const BetaSolution& beta, int n, int trial, std::uint64_t seed, double f,
                       const std::string& key) {
  if (beta.status != RebalanceStatus::optimal) {
    std::ostringstream msg;
    msg << key << " trial " << trial << " (seed " << seed << ", n " << n << "): beta program infeasible";
    if (beta.infeasibility) {
      msg << "; max flow " << beta.infeasibility->max_flow << " < supply " << beta.infeasibility->total_supply;
    }
    throw SweepAborted(msg.str());
  }
  TrialRecord r;
  r.group_key = key;
  r.trial = trial;
  r.seed = seed;
  r.n = n;
  r.f = f;
  const FleetSizes sizes = fleet_sizes(net, alpha.alpha, beta.beta);
  r.v_alpha = sizes.v_alpha;
  r.r_alpha_beta = sizes.r_alpha_beta;
  r.objective_alpha = alpha.objective;
  r.objective_beta = beta.objective;
  r.customer_in_transit = sizes.v_alpha - alpha.objective;
  r.ratio = sizes.v_alpha > 0.0 ? sizes.r_alpha_beta / sizes.v_alpha : std::numeric_limits<double>::quiet_NaN();
  r.reb_fraction =
      sizes.r_alpha_beta > 0.0 ? alpha.objective / sizes.r_alpha_beta : std::numeric_limits<double>::quiet_NaN();
  r.alpha_residual = balance_residual(alpha.alpha, d.d);
  r.beta_residual = balance_residual(beta.beta, -d.d);
  r.capacity_excess = (beta.beta - driver_capacity(net)).maxCoeff();
  return r;
}

void summarize(SweepReport& report) {
  std::vector<std::string> keys;
  for (const TrialRecord& r : report.rows) {
    if (std::find(keys.begin(), keys.end(), r.group_key) == keys.end()) keys.push_back(r.group_key);
  }
  for (const std::string& key : keys) {
    for (const std::string& metric : kMetrics) {
      GroupSummary s{key, metric, 0.0, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
      int count = 0;
      for (const TrialRecord& r : report.rows) {
        if (r.group_key != key) continue;
        const double x = metric_of(r, metric);
        if (std::isnan(x)) continue;
        s.mean += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
        ++count;
      }
      if (count > 0) {
        s.mean /= count;
      } else {
        s.mean = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
      }
      report.summary.push_back(s);
    }
  }
}

StationNetwork make_instance(const SweepConfig& config, const InstanceFactory& factory, int n, std::uint64_t seed) {
  StationNetwork net = factory ? factory(n, seed) : generate_instance(n, seed, config.generator);
  validate(net);
  return net;
}

}  // namespace

void validate(const SweepConfig& config) {
  if (config.sizes.empty()) throw ValidationError("sizes", "must not be empty");
  for (int n : config.sizes) {
    if (n < 2) throw ValidationError("sizes", "every size must be >= 2");
  }
  if (config.trials_per_size < 1) throw ValidationError("trials_per_size", "must be >= 1");
  for (double f : config.f_values) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ValidationError("f_values", "must be finite and >= 0");
  }
  validate(config.generator);
}

std::uint64_t trial_seed(std::uint64_t base_seed, int n, int trial) {
  return base_seed * 10000U + static_cast<std::uint64_t>(n) * 100U + static_cast<std::uint64_t>(trial);
}

std::vector<TrialRecord> SweepReport::group(const std::string& key) const {
  std::vector<TrialRecord> out;
  for (const TrialRecord& r : rows) {
    if (r.group_key == key) out.push_back(r);
  }
  return out;
}

const GroupSummary& SweepReport::stat(const std::string& key, const std::string& metric) const {
  for (const GroupSummary& s : summary) {
    if (s.group_key == key && s.metric == metric) return s;
  }
  throw std::out_of_range("no summary for " + key + "/" + metric);
}

SweepReport run_station_sweep(const SweepConfig& config, const InstanceFactory& factory) {
  validate(config);
  struct Task {
    int n;
    int trial;
  };
  std::vector<Task> tasks;
  for (int n : config.sizes) {
    for (int t = 0; t < config.trials_per_size; ++t) tasks.push_back({n, t});
  }
  SweepReport report;
  report.rows.resize(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t k) {
    const auto [n, trial] = tasks[k];
    const std::uint64_t seed = trial_seed(config.base_seed, n, trial);
    const StationNetwork net = make_instance(config, factory, n, seed);
    const ImbalanceVector d = compute_imbalance(net);
    const AlphaSolution alpha = solve_alpha(net, d);
    const BetaSolution beta = solve_beta(net, d);
    report.rows[k] = record_for(net, d, alpha, beta, n, trial, seed, net.f.maxCoeff(), "n=" + std::to_string(n));
  });
  summarize(report);
  return report;
}

SweepReport run_f_sweep(const SweepConfig& config, const InstanceFactory& factory) {
  validate(config);
  if (config.sizes.size() != 1) throw ValidationError("sizes", "f-sweep needs exactly one station count");
  if (config.f_values.empty()) throw ValidationError("f_values", "must not be empty");
  const int n = config.sizes.front();
  const std::size_t fs = config.f_values.size();

  SweepReport report;
  report.rows.resize(static_cast<std::size_t>(config.trials_per_size) * fs);
  parallel_for(static_cast<std::size_t>(config.trials_per_size), config.threads, [&](std::size_t t) {
    const int trial = static_cast<int>(t);
    const std::uint64_t seed = trial_seed(config.base_seed, n, trial);
    StationNetwork net = make_instance(config, factory, n, seed);
    const ImbalanceVector d = compute_imbalance(net);
    const AlphaSolution alpha = solve_alpha(net, d);
    for (std::size_t k = 0; k < fs; ++k) {
      const double f = config.f_values[k];
      net.f.setConstant(f);
      const BetaSolution beta = solve_beta(net, d);
      // Rows grouped by f, trials in order within each group.
      report.rows[k * static_cast<std::size_t>(config.trials_per_size) + t] =
          record_for(net, d, alpha, beta, n, trial, seed, f, f_key(f));
    }
  });
  summarize(report);
  return report;
}

std::string report_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "group_key,trial,seed,n,f,v_alpha,r_alpha_beta,ratio,reb_fraction\n";
  for (const TrialRecord& r : report.rows) {
    out << r.group_key << ',' << r.trial << ',' << r.seed << ',' << r.n << ',' << format_number(r.f) << ','
        << format_number(r.v_alpha) << ',' << format_number(r.r_alpha_beta) << ',' << format_number(r.ratio) << ','
        << format_number(r.reb_fraction) << '\n';
  }
  return out.str();
}

std::string summary_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "group_key,metric,mean,min,max\n";
  for (const GroupSummary& s : report.summary) {
    out << s.group_key << ',' << s.metric << ',' << format_number(s.mean) << ',' << format_number(s.min) << ','
        << format_number(s.max) << '\n';
  }
  return out.str();
}

void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir, const std::string& prefix) {
  write_text(dir / "report.csv", report_csv(report));
  write_text(dir / "summary.csv", summary_csv(report));
  for (const std::string& metric : kMetrics) {
    std::ostringstream dat;
    dat << "# x mean min max (" << metric << ")\n";
    for (const GroupSummary& s : report.summary) {
      if (s.metric != metric) continue;
      // group keys look like "n=10" or "f=2"
      dat << s.group_key.substr(s.group_key.find('=') + 1) << ' ' << format_number(s.mean) << ' '
          << format_number(s.min) << ' ' << format_number(s.max) << '\n';
    }
    write_text(dir / (prefix + "_" + metric + ".dat"), dat.str());
  }
}

}  // namespace modreb
