#include "modreb/fluidsim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <iomanip>
#include <limits>

#include "modreb/generator.hpp"

namespace modreb {
namespace {

void require_assignment(const Eigen::MatrixXd& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw InvalidInput(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!m.allFinite() || (m.array() < 0.0).any()) {
    throw InvalidInput(std::string(name) + " must be finite and nonnegative");
  }
}

void require_state_vector(const Eigen::VectorXd& x, Eigen::Index n, const char* name) {
  if (x.size() != n) throw InvalidState(std::string(name) + " must have " + std::to_string(n) + " entries");
  if (!x.allFinite()) throw InvalidState(std::string(name) + " contains NaN or infinity");
  if ((x.array() < 0.0).any()) throw InvalidState(std::string(name) + " has a negative entry");
}

double min_positive(const Eigen::MatrixXd& T) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < T.size(); ++i) {
    if (T.data()[i] > 0.0) best = std::min(best, T.data()[i]);
  }
  return best;
}

}  // namespace

FluidSystem::FluidSystem(StationNetwork net, Eigen::MatrixXd alpha, Eigen::MatrixXd beta, double h)
    : net_(std::move(net)), alpha_(std::move(alpha)), beta_(std::move(beta)), h_(h) {
  validate(net_);
  const Eigen::Index n = net_.size();
  require_assignment(alpha_, n, "alpha");
  require_assignment(beta_, n, "beta");
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw InvalidInput("step size h must be positive");
  const double shortest = min_positive(net_.T);
  if (std::isfinite(shortest) && h_ > shortest / 4.0) {
    throw InvalidInput("step size h = " + std::to_string(h_) + " exceeds a quarter of the shortest travel time " +
                       std::to_string(shortest));
  }
  alpha_.diagonal().setZero();
  beta_.diagonal().setZero();
  gamma_ = alpha_.rowwise().sum();
  driver_cap_ = net_.f.cwiseProduct(net_.p);
  delay_ = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) delay_(i, j) = std::max(1, static_cast<int>(std::lround(net_.T(i, j) / h_)));
    }
  }
}

double FluidSystem::equilibrium_vehicles_in_transit() const {
  const Eigen::MatrixXd rate = net_.lambda.asDiagonal() * net_.p + alpha_;
  return h_ * delay_.cast<double>().cwiseProduct(rate).sum();
}

double FluidSystem::equilibrium_drivers_in_transit() const {
  const Eigen::MatrixXd riding = beta_.cwiseMin(driver_cap_.cwiseProduct(net_.lambda.replicate(1, net_.size())));
  return h_ * delay_.cast<double>().cwiseProduct(alpha_ + riding).sum();
}

FluidState FluidSystem::initial_state(const Eigen::VectorXd& c0, const Eigen::VectorXd& v0,
                                      const Eigen::VectorXd& r0, HistoryKind history) const {
  const Eigen::Index n = net_.size();
  require_state_vector(c0, n, "c");
  require_state_vector(v0, n, "v");
  require_state_vector(r0, n, "r");

  FluidState state;
  state.c = c0;
  state.v = v0;
  state.r = r0;
  state.history.length = delay_.maxCoeff() + 1;
  const Eigen::Index len = state.history.length;
  state.history.customer = Eigen::MatrixXd::Zero(len, n);
  state.history.active = Eigen::MatrixXd::Zero(len, n);
  state.history.rebalance = Eigen::MatrixXd::Zero(len, n);
  state.history.driver = Eigen::MatrixXd::Ones(len, n);
  state.vehicles_in_transit = Eigen::MatrixXd::Zero(n, n);
  state.drivers_in_transit = Eigen::MatrixXd::Zero(n, n);

  if (history == HistoryKind::equilibrium) {
    state.history.customer.rowwise() = (h_ * net_.lambda).transpose();
    state.history.active.setOnes();
    state.history.rebalance.setOnes();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double steps = delay_(i, j);
        const double customer = h_ * net_.lambda(i);
        state.vehicles_in_transit(i, j) = steps * (net_.p(i, j) * customer + alpha_(i, j) * h_);
        state.drivers_in_transit(i, j) =
            steps * (alpha_(i, j) * h_ + std::min(beta_(i, j) * h_, driver_cap_(i, j) * customer));
      }
    }
  }
  return state;
}

void FluidSystem::advance(FluidState& s) const {
  const Eigen::Index n = net_.size();
  const std::int64_t k = s.step_index;
  DepartureHistory& hist = s.history;

  Eigen::VectorXd vehicles_in = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd drivers_in = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::Index row = hist.row(k - delay_(i, j));
      const double customer = hist.customer(row, i);
      const double rebalancing = alpha_(i, j) * h_ * hist.rebalance(row, i);
      const double riding =
          hist.driver(row, i) * std::min(beta_(i, j) * h_ * hist.active(row, i), driver_cap_(i, j) * customer);
      const double vehicles = net_.p(i, j) * customer + rebalancing;
      const double drivers = rebalancing + riding;
      vehicles_in(j) += vehicles;
      drivers_in(j) += drivers;
      s.vehicles_in_transit(i, j) -= vehicles;
      s.drivers_in_transit(i, j) -= drivers;
    }
  }

  const Eigen::Index write_row = hist.row(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool has_vehicles = gate(s.v(i));
    const bool has_drivers = gate(s.r(i));
    const bool has_customers = gate(s.c(i));
    const double lam = net_.lambda(i);

    double customer = 0.0;
    if (has_vehicles) customer = has_customers ? std::min(net_.mu(i) * h_, s.c(i) + lam * h_) : lam * h_;
    const double active = has_vehicles && has_drivers ? 1.0 : 0.0;
    double rebalance = active;

    bool vehicles_exhausted = false;
    const double vehicles_available = s.v(i) + vehicles_in(i);
    const double vehicles_out = customer + gamma_(i) * h_ * rebalance;
    if (vehicles_out > vehicles_available) {
      const double scale = vehicles_available / vehicles_out;
      customer *= scale;
      rebalance *= scale;
      vehicles_exhausted = true;
    }

    double riding = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) riding += std::min(beta_(i, j) * h_ * active, driver_cap_(i, j) * customer);
    }
    double driver_scale = 1.0;
    bool drivers_exhausted = false;
    const double drivers_available = s.r(i) + drivers_in(i);
    const double drivers_out = gamma_(i) * h_ * rebalance + riding;
    if (drivers_out > drivers_available) {
      driver_scale = drivers_available / drivers_out;
      rebalance *= driver_scale;
      riding *= driver_scale;
      drivers_exhausted = true;
    }

    hist.customer(write_row, i) = customer;
    hist.active(write_row, i) = active;
    hist.rebalance(write_row, i) = rebalance;
    hist.driver(write_row, i) = driver_scale;

    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double rebalancing = alpha_(i, j) * h_ * rebalance;
      s.vehicles_in_transit(i, j) += net_.p(i, j) * customer + rebalancing;
      s.drivers_in_transit(i, j) +=
          rebalancing + driver_scale * std::min(beta_(i, j) * h_ * active, driver_cap_(i, j) * customer);
    }

    const double rebalancing_out = gamma_(i) * h_ * rebalance;
    s.c(i) = std::max(0.0, s.c(i) + lam * h_ - customer);
    // A driver shortfall can hold back rebalancing vehicles after the vehicle clamp.
    const bool vehicles_empty = vehicles_exhausted && driver_scale == 1.0;
    s.v(i) = vehicles_empty ? 0.0 : std::max(0.0, vehicles_available - customer - rebalancing_out);
    s.r(i) = drivers_exhausted ? 0.0 : std::max(0.0, drivers_available - rebalancing_out - riding);
  }

  s.step_index = k + 1;
  s.time = static_cast<double>(s.step_index) * h_;
}

FluidState FluidSystem::step(const FluidState& state) const {
  FluidState next = state;
  advance(next);
  return next;
}

Eigen::VectorXd FluidSystem::customer_rate(const FluidState& s) const {
  Eigen::VectorXd rate(net_.size());
  for (Eigen::Index i = 0; i < net_.size(); ++i) {
    const double hv = gate(s.v(i)) ? 1.0 : 0.0;
    const double hc = gate(s.c(i)) ? 1.0 : 0.0;
    rate(i) = net_.lambda(i) * (1.0 - hv) + (net_.lambda(i) - net_.mu(i)) * hc * hv;
  }
  return rate;
}

FluidState step(const FluidState& state, const StationNetwork& net, const Eigen::MatrixXd& alpha,
                const Eigen::MatrixXd& beta, double h) {
  const FluidSystem system(net, alpha, beta, h);
  if (state.history.length != system.delay_steps().maxCoeff() + 1) {
    throw InvalidState("state history was not built for this network and step size");
  }
  require_state_vector(state.c, net.size(), "c");
  require_state_vector(state.v, net.size(), "v");
  require_state_vector(state.r, net.size(), "r");
  return system.step(state);
}

namespace {

TraceSample sample_of(const FluidState& s) {
  return {s.time, s.c, s.v, s.r, s.total_vehicles(), s.total_drivers()};
}

void record_crossings(const FluidState& before, const FluidState& after, SimTrace& trace,
                      std::size_t max_events) {
  const auto check = [&](const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, Quantity q) {
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      if (gate(x0(i)) == gate(x1(i))) continue;
      if (trace.events.size() < max_events) {
        trace.events.push_back({after.time, static_cast<int>(i), q, gate(x1(i))});
      } else {
        ++trace.dropped_events;
      }
    }
  };
  check(before.c, after.c, Quantity::customers);
  check(before.v, after.v, Quantity::vehicles);
  check(before.r, after.r, Quantity::drivers);
}

double smallest_component(const FluidState& s) {
  return std::min({s.c.minCoeff(), s.v.minCoeff(), s.r.minCoeff()});
}

SimTrace run(const FluidSystem& system, FluidState state, double horizon, const SimOptions& options,
             const std::function<void(const FluidState&)>& observer) {
  const double h = system.step_size();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive");
  if (!options.allow_short_horizon && horizon < 2.0 * system.max_travel_time()) {
    throw InvalidInput("horizon must be at least 2 max T_ij");
  }
  const auto steps = static_cast<std::int64_t>(std::ceil(horizon / h - 1e-9));
  double interval = options.sample_interval;
  if (interval <= 0.0) interval = horizon / 1000.0;
  const auto every = std::max<std::int64_t>(1, std::llround(interval / h));

  SimTrace trace;
  trace.h = h;
  trace.horizon = static_cast<double>(steps) * h;
  trace.initial_vehicles = state.total_vehicles();
  trace.initial_drivers = state.total_drivers();
  trace.min_state = smallest_component(state);
  trace.samples.push_back(sample_of(state));
  if (observer) observer(state);

  for (std::int64_t k = 1; k <= steps; ++k) {
    const FluidState before_gates{state.c, state.v, state.r, {}, {}, {}, 0, 0.0};
    system.advance(state);
    record_crossings(before_gates, state, trace, options.max_events);
    trace.max_vehicle_drift = std::max(trace.max_vehicle_drift, std::abs(state.total_vehicles() - trace.initial_vehicles));
    trace.max_driver_drift = std::max(trace.max_driver_drift, std::abs(state.total_drivers() - trace.initial_drivers));
    trace.min_state = std::min(trace.min_state, smallest_component(state));
    if (k % every == 0 || k == steps) trace.samples.push_back(sample_of(state));
    if (observer) observer(state);
  }
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace

SimTrace simulate(const FluidSystem& system, FluidState init, double horizon, const SimOptions& options) {
  return run(system, std::move(init), horizon, options, {});
}

SimTrace simulate(const StationNetwork& net, const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& beta,
                  const Eigen::VectorXd& c0, const Eigen::VectorXd& v0, const Eigen::VectorXd& r0,
                  double horizon, double h, const SimOptions& options) {
  const FluidSystem system(net, alpha, beta, h);
  return simulate(system, system.initial_state(c0, v0, r0, HistoryKind::empty), horizon, options);
}

double conservation_tolerance(const StationNetwork& net, const Eigen::MatrixXd& alpha,
                              const Eigen::MatrixXd& beta, double h) {
  return 10.0 * h * (net.lambda.sum() + alpha.sum() + beta.sum());
}

std::string trace_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << std::setprecision(17);
  const Eigen::Index n = trace.samples.empty() ? 0 : trace.samples.front().c.size();
  out << "t";
  for (const char* name : {"c", "v", "r"}) {
    for (Eigen::Index i = 1; i <= n; ++i) out << ',' << name << '_' << i;
  }
  out << ",V_total,R_total\n";
  for (const TraceSample& s : trace.samples) {
    out << s.time;
    for (const Eigen::VectorXd* x : {&s.c, &s.v, &s.r}) {
      for (Eigen::Index i = 0; i < x->size(); ++i) out << ',' << (*x)(i);
    }
    out << ',' << s.vehicles << ',' << s.drivers << '\n';
  }
  return out.str();
}

StabilityReport stability_probe(const StationNetwork& net, const RebalanceSolution& solution,
                                const StabilityOptions& options) {
  return stability_probe_totals(net, solution, solution.assignment.v_alpha * (1.0 + options.slack_v),
                                solution.assignment.r_alpha_beta * (1.0 + options.slack_r), options);
}

StabilityReport stability_probe_totals(const StationNetwork& net, const RebalanceSolution& solution,
                                       double fleet, double drivers, const StabilityOptions& options) {
  if (solution.status != RebalanceStatus::optimal) {
    throw InvalidInput("stability_probe: assignment is not feasible (beta_infeasible)");
  }
  const double v_alpha = solution.assignment.v_alpha;
  const double r_alpha_beta = solution.assignment.r_alpha_beta;
  if (!(fleet > v_alpha) || !(drivers > r_alpha_beta)) {
    std::ostringstream msg;
    msg << "no equilibrium exists: need V > V_alpha = " << v_alpha << " and R > R_alpha_beta = " << r_alpha_beta
        << " (got V = " << fleet << ", R = " << drivers << ")";
    throw InsufficientFleet(msg.str());
  }
  if (!(options.perturbation >= 0.0 && options.perturbation < 1.0 / 3.0)) {
    throw InvalidInput("stability_probe: perturbation must lie in [0, 1/3)");
  }

  const Eigen::Index n = net.size();
  const FluidSystem system(net, solution.assignment.alpha, solution.assignment.beta, options.h);
  const double idle_vehicles = (fleet - v_alpha) / static_cast<double>(n);
  const double idle_drivers = (drivers - r_alpha_beta) / static_cast<double>(n);

  UniformSampler rng(options.seed);
  Eigen::VectorXd wv(n), wr(n), u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    wv(i) = rng.next(-1.0, 1.0);
    wr(i) = rng.next(-1.0, 1.0);
    u(i) = 1.0 - rng.next();  // (0, 1]
  }
  wv.array() -= wv.mean();
  wr.array() -= wr.mean();
  const double eps = options.perturbation;
  const Eigen::VectorXd v0 = idle_vehicles * (Eigen::VectorXd::Ones(n) + eps * wv);
  const Eigen::VectorXd r0 = idle_drivers * (Eigen::VectorXd::Ones(n) + eps * wr);
  const Eigen::VectorXd c0 = eps * idle_vehicles * u;

  StabilityReport report;
  report.fleet = fleet;
  report.drivers = drivers;
  report.drain_bound = (c0.array() / (net.mu - net.lambda).array()).maxCoeff();
  report.transient_end = report.drain_bound + system.max_travel_time();
  const double horizon =
      options.horizon > 0.0 ? options.horizon : report.drain_bound + 3.0 * system.max_travel_time();

  const ImbalanceVector d = compute_imbalance(net);
  std::vector<bool> needs_drivers(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) needs_drivers[static_cast<std::size_t>(i)] = std::abs(d.d(i)) > 1e-12;

  const double inf = std::numeric_limits<double>::infinity();
  report.min_idle_vehicles = inf;
  report.min_idle_drivers = inf;
  bool drained = false;
  const auto observe = [&](const FluidState& s) {
    const bool clear = (s.c.array() <= options.customer_tolerance).all();
    if (clear && !drained) report.drain_time = s.time;
    drained = clear;
    if (s.time + 1e-12 >= report.transient_end) {
      report.min_idle_vehicles = std::min(report.min_idle_vehicles, s.v.minCoeff());
      for (Eigen::Index i = 0; i < n; ++i) {
        if (needs_drivers[static_cast<std::size_t>(i)]) {
          report.min_idle_drivers = std::min(report.min_idle_drivers, s.r(i));
        } else if (s.r(i) < 0.0) {
          report.min_idle_drivers = std::min(report.min_idle_drivers, s.r(i));
        }
      }
    }
  };

  report.trace = run(system, system.initial_state(c0, v0, r0, HistoryKind::equilibrium), horizon,
                     options.sim, observe);
  if (!drained) report.drain_time = inf;

  report.vehicle_drift = report.trace.max_vehicle_drift;
  report.driver_drift = report.trace.max_driver_drift;
  report.drift_tolerance =
      conservation_tolerance(net, solution.assignment.alpha, solution.assignment.beta, options.h);

  const FluidState& last = report.trace.final_state;
  report.customers_cleared = (last.c.array() <= options.customer_tolerance).all();
  report.vehicles_positive = report.min_idle_vehicles >= options.positivity_tolerance;
  report.drivers_positive = report.min_idle_drivers >= options.positivity_tolerance ||
                            (report.min_idle_drivers == inf);
  report.conserved =
      report.vehicle_drift <= report.drift_tolerance && report.driver_drift <= report.drift_tolerance;
  report.pass = report.customers_cleared && report.vehicles_positive && report.drivers_positive && report.conserved;
  return report;
}

}  // namespace modreb
