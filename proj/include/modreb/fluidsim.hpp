#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modreb/network.hpp"
#include "modreb/rebalancer.hpp"

namespace modreb {

/// Heaviside gate with H(0) = 0.
inline bool gate(double x) { return x > 0.0; }

/// Realized departures of one station over the last few steps.
///
/// Row k (mod length) stores, for the step that started at k*h:
///   customer  - vehicle mass that left carrying customers (split over destinations by p_ij),
///   active    - 1 if H(v_i) H(r_i) held, else 0,
///   rebalance - realized fraction of alpha_ij * h (active times any clamping factor),
///   driver    - clamping factor applied to driver departures riding customer trips.
/// Every arrival is reconstructed from these, so delayed inflows match the
/// departures that fed them exactly.
struct DepartureHistory {
  Eigen::Index length = 0;
  Eigen::MatrixXd customer;   // length x n
  Eigen::MatrixXd active;     // length x n
  Eigen::MatrixXd rebalance;  // length x n
  Eigen::MatrixXd driver;     // length x n

  Eigen::Index row(std::int64_t step) const {
    const auto m = static_cast<std::int64_t>(length);
    return static_cast<Eigen::Index>(((step % m) + m) % m);
  }
};

enum class HistoryKind {
  /// c, v, r identically zero before t = 0: nothing in transit.
  empty,
  /// Stations held at an equilibrium (c = 0, v, r > 0) before t = 0.
  equilibrium,
};

struct FluidState {
  Eigen::VectorXd c;
  Eigen::VectorXd v;
  Eigen::VectorXd r;
  Eigen::MatrixXd vehicles_in_transit;  // (i, j): mass en route from i to j
  Eigen::MatrixXd drivers_in_transit;
  DepartureHistory history;
  std::int64_t step_index = 0;
  double time = 0.0;

  double total_vehicles() const { return v.sum() + vehicles_in_transit.sum(); }
  double total_drivers() const { return r.sum() + drivers_in_transit.sum(); }
};

/// Discretized fluid dynamics of a station network under a fixed assignment.
///
/// Explicit Euler with step h. Travel times are rounded to whole steps
/// (at least one). Gates read the state at the start of the step; outflows
/// that would overdraw a queue are scaled by a common factor so the queue
/// lands at zero, and the scaled amounts are what enter the delay lines.
class FluidSystem {
 public:
  /// Throws InvalidInput if h is not positive or exceeds a quarter of the
  /// shortest positive travel time, or if the matrices do not match `net`.
  FluidSystem(StationNetwork net, Eigen::MatrixXd alpha, Eigen::MatrixXd beta, double h);

  const StationNetwork& network() const { return net_; }
  const Eigen::MatrixXd& alpha() const { return alpha_; }
  const Eigen::MatrixXd& beta() const { return beta_; }
  double step_size() const { return h_; }
  /// Travel times in steps.
  const Eigen::MatrixXi& delay_steps() const { return delay_; }
  double max_travel_time() const { return net_.T.maxCoeff(); }

  /// In-transit masses implied by an equilibrium history (rounded travel times).
  double equilibrium_vehicles_in_transit() const;
  double equilibrium_drivers_in_transit() const;

  /// Throws InvalidState on NaN, negative or mis-sized inputs.
  FluidState initial_state(const Eigen::VectorXd& c0, const Eigen::VectorXd& v0, const Eigen::VectorXd& r0,
                           HistoryKind history) const;

  void advance(FluidState& state) const;
  FluidState step(const FluidState& state) const;

  /// Right-hand side of the customer equation at a state (for checks).
  Eigen::VectorXd customer_rate(const FluidState& state) const;

 private:
  StationNetwork net_;
  Eigen::MatrixXd alpha_;
  Eigen::MatrixXd beta_;
  Eigen::VectorXd gamma_;       // row sums of alpha
  Eigen::MatrixXd driver_cap_;  // f_ij p_ij, multiplies the customer departure mass
  Eigen::MatrixXi delay_;
  double h_;
};

/// One step of the discretized dynamics (value-returning form of FluidSystem::advance).
FluidState step(const FluidState& state, const StationNetwork& net, const Eigen::MatrixXd& alpha,
                const Eigen::MatrixXd& beta, double h);

enum class Quantity { customers, vehicles, drivers };

struct ZeroCrossing {
  double time = 0.0;
  int station = 0;
  Quantity quantity = Quantity::customers;
  bool became_positive = false;
};

struct TraceSample {
  double time = 0.0;
  Eigen::VectorXd c;
  Eigen::VectorXd v;
  Eigen::VectorXd r;
  double vehicles = 0.0;
  double drivers = 0.0;
};

struct SimOptions {
  /// Time between recorded samples; 0 picks roughly 1000 samples over the horizon.
  double sample_interval = 0.0;
  /// Zero-crossings beyond this count are tallied but not stored.
  std::size_t max_events = 10000;
  /// Skip the horizon >= 2 max T_ij precondition (for short diagnostic runs).
  bool allow_short_horizon = false;
};

struct SimTrace {
  std::vector<TraceSample> samples;
  std::vector<ZeroCrossing> events;
  std::size_t dropped_events = 0;
  double h = 0.0;
  double horizon = 0.0;
  double initial_vehicles = 0.0;
  double initial_drivers = 0.0;
  /// max over every step of |V(t) - V(0)| and |R(t) - R(0)|.
  double max_vehicle_drift = 0.0;
  double max_driver_drift = 0.0;
  double min_state = 0.0;  // smallest c, v or r component seen
  FluidState final_state;
};

/// Integrates from `init` until `horizon`. Throws InvalidInput if horizon < 2 max T_ij
/// (unless options.allow_short_horizon).
SimTrace simulate(const FluidSystem& system, FluidState init, double horizon, const SimOptions& options = {});

SimTrace simulate(const StationNetwork& net, const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& beta,
                  const Eigen::VectorXd& c0, const Eigen::VectorXd& v0, const Eigen::VectorXd& r0,
                  double horizon, double h, const SimOptions& options = {});

/// Conservation tolerance 10 h (sum lambda + sum (alpha + beta)).
double conservation_tolerance(const StationNetwork& net, const Eigen::MatrixXd& alpha,
                              const Eigen::MatrixXd& beta, double h);

/// CSV columns: t, c_1..c_n, v_1..v_n, r_1..r_n, V_total, R_total.
std::string trace_csv(const SimTrace& trace);

struct StabilityOptions {
  double slack_v = 0.2;
  double slack_r = 0.2;
  /// Relative size of the initial disturbance of the idle stocks; c_i(0) is
  /// drawn in (0, perturbation * equilibrium v_i]. Must lie in [0, 1/3).
  double perturbation = 0.1;
  double h = 0.05;
  std::uint64_t seed = 1;
  /// 0 selects T' + 3 max T_ij with T' = max_i c_i(0) / (mu_i - lambda_i).
  double horizon = 0.0;
  double customer_tolerance = 1e-4;
  double positivity_tolerance = 1e-6;
  SimOptions sim;
};

struct StabilityReport {
  bool pass = false;
  bool customers_cleared = false;   // all c_i <= customer_tolerance at the horizon
  bool vehicles_positive = false;   // all v_i >= positivity_tolerance after the transient
  bool drivers_positive = false;    // all r_i >= positivity_tolerance after the transient (>= 0 where D_i = 0)
  bool conserved = false;           // drifts within conservation_tolerance
  double fleet = 0.0;               // V
  double drivers = 0.0;             // R
  double drain_bound = 0.0;         // T' = max_i c_i(0) / (mu_i - lambda_i)
  double drain_time = 0.0;          // first time all c_i <= customer_tolerance for good
  double transient_end = 0.0;       // T' + max T_ij
  double min_idle_vehicles = 0.0;   // after transient_end
  double min_idle_drivers = 0.0;    // after transient_end, over stations with D_i != 0
  double vehicle_drift = 0.0;
  double driver_drift = 0.0;
  double drift_tolerance = 0.0;
  SimTrace trace;
};

/// Simulates from a perturbation of an equilibrium with V = V_alpha (1 + slack_v)
/// and R = R_alpha_beta (1 + slack_r). Throws InsufficientFleet when either total does
/// not exceed its minimum, before simulating.
StabilityReport stability_probe(const StationNetwork& net, const RebalanceSolution& solution,
                                const StabilityOptions& options = {});

/// Same with explicit totals.
StabilityReport stability_probe_totals(const StationNetwork& net, const RebalanceSolution& solution,
                                       double fleet, double drivers, const StabilityOptions& options = {});

}  // namespace modreb
