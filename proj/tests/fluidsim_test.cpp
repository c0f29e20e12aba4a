#include <gtest/gtest.h>

#include <cmath>

#include "modreb/fluidsim.hpp"
#include "modreb/generator.hpp"
#include "oracles.hpp"

using namespace modreb;
using modreb::testing::random_network;
using modreb::testing::symmetric_network;
using modreb::testing::two_station_network;

namespace {

// lambda = (1, 1), p12 = p21 = 1, T = 1, mu = (2, 2).
StationNetwork balanced_pair() {
  StationNetwork net;
  net.lambda = Eigen::Vector2d(1.0, 1.0);
  net.mu = Eigen::Vector2d(2.0, 2.0);
  net.p = (Eigen::Matrix2d() << 0.0, 1.0, 1.0, 0.0).finished();
  net.T = (Eigen::Matrix2d() << 0.0, 1.0, 1.0, 0.0).finished();
  net.f = Eigen::Matrix2d::Ones();
  return net;
}

Eigen::VectorXd stacked(const TraceSample& s) {
  Eigen::VectorXd x(3 * s.c.size());
  x << s.c, s.v, s.r;
  return x;
}

// State at time t from a trace sampled every `interval`.
const TraceSample& sample_at(const SimTrace& trace, double t) {
  for (const TraceSample& s : trace.samples) {
    if (std::abs(s.time - t) < 1e-9) return s;
  }
  throw std::out_of_range("no sample at t");
}

}  // namespace

TEST(Step, BalancedPairSettlesWithOneUnitInTransit) {
  const StationNetwork net = balanced_pair();
  const Eigen::Matrix2d zero = Eigen::Matrix2d::Zero();
  for (double h : {0.01, 0.005}) {
    const SimTrace trace = simulate(net, zero, zero, Eigen::Vector2d::Zero(), Eigen::Vector2d(2.0, 2.0),
                                    Eigen::Vector2d::Zero(), 10.0, h);
    const FluidState& last = trace.final_state;
    EXPECT_NEAR(last.v(0), 1.0, 1e-9) << "h=" << h;
    EXPECT_NEAR(last.v(1), 1.0, 1e-9) << "h=" << h;
    EXPECT_NEAR(last.vehicles_in_transit(0, 1), 1.0, 1e-9);
    EXPECT_NEAR(last.vehicles_in_transit(1, 0), 1.0, 1e-9);
    for (const TraceSample& s : trace.samples) EXPECT_EQ(s.c.maxCoeff(), 0.0);
  }
}

TEST(Step, AllQueuesOccupiedDrainsCustomers) {
  const StationNetwork net = symmetric_network();
  const FluidSystem system(net, Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(), 0.1);
  const FluidState s = system.initial_state(Eigen::Vector3d::Constant(0.5), Eigen::Vector3d::Constant(2.0),
                                            Eigen::Vector3d::Constant(1.0), HistoryKind::empty);
  EXPECT_TRUE(system.customer_rate(s).isApprox(net.lambda - net.mu));
  const FluidState next = system.step(s);
  EXPECT_TRUE(next.c.isApprox(s.c + 0.1 * (net.lambda - net.mu)));
}

TEST(Step, EmptyStationAccumulatesCustomers) {
  const StationNetwork net = symmetric_network();
  const FluidSystem system(net, Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(), 0.1);
  const FluidState s = system.initial_state(Eigen::Vector3d(0.5, 0.0, 0.0), Eigen::Vector3d(0.0, 1.0, 1.0),
                                            Eigen::Vector3d::Ones(), HistoryKind::empty);
  EXPECT_DOUBLE_EQ(system.customer_rate(s)(0), net.lambda(0));
  EXPECT_DOUBLE_EQ(step(s, net, Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(), 0.1).c(0), 0.6);
}

TEST(Step, RejectsBadInputs) {
  const StationNetwork net = symmetric_network(1.0);
  const Eigen::Matrix3d zero = Eigen::Matrix3d::Zero();
  EXPECT_THROW(FluidSystem(net, zero, zero, 0.3), InvalidInput);  // above T / 4
  EXPECT_THROW(FluidSystem(net, zero, zero, 0.0), InvalidInput);
  EXPECT_THROW(FluidSystem(net, Eigen::Matrix2d::Zero(), zero, 0.1), InvalidInput);
  const FluidSystem system(net, zero, zero, 0.1);
  EXPECT_THROW(system.initial_state(Eigen::Vector3d(-1.0, 0.0, 0.0), Eigen::Vector3d::Ones(),
                                    Eigen::Vector3d::Ones(), HistoryKind::empty),
               InvalidState);
  EXPECT_THROW(system.initial_state(Eigen::Vector3d(std::nan(""), 0.0, 0.0), Eigen::Vector3d::Ones(),
                                    Eigen::Vector3d::Ones(), HistoryKind::empty),
               InvalidState);
  const FluidState s = system.initial_state(Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(),
                                            Eigen::Vector3d::Ones(), HistoryKind::empty);
  EXPECT_THROW(simulate(system, s, 1.0), InvalidInput);  // horizon below 2 max T
  SimOptions options;
  options.allow_short_horizon = true;
  EXPECT_NO_THROW(simulate(system, s, 1.0, options));
}

TEST(Step, ConservesMassWhenVehiclesAndDriversRunOutTogether) {
  // Station 1 is short of both: the driver clamp holds back rebalancing
  // vehicles after the vehicle clamp already fired.
  const StationNetwork net = two_station_network();
  Eigen::Matrix2d alpha = Eigen::Matrix2d::Zero();
  alpha(0, 1) = 5.0;
  const Eigen::Matrix2d beta = Eigen::Matrix2d::Zero();
  const FluidSystem system(net, alpha, beta, 0.5);
  const FluidState s = system.initial_state(Eigen::Vector2d::Zero(), Eigen::Vector2d(0.5, 0.0),
                                            Eigen::Vector2d(0.1, 0.0), HistoryKind::empty);
  const FluidState next = system.step(s);
  EXPECT_NEAR(next.total_vehicles(), s.total_vehicles(), 1e-15);
  EXPECT_NEAR(next.total_drivers(), s.total_drivers(), 1e-15);
  EXPECT_GT(next.v(0), 0.0);
  EXPECT_EQ(next.r(0), 0.0);
}

TEST(Simulate, VehicleDriftTinyOnBalancedPair) {
  const StationNetwork net = balanced_pair();
  const Eigen::Matrix2d zero = Eigen::Matrix2d::Zero();
  const SimTrace trace = simulate(net, zero, zero, Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(2.0, 2.0),
                                  Eigen::Vector2d::Zero(), 10.0, 1e-3);
  EXPECT_LE(trace.max_vehicle_drift, 1e-6 * trace.initial_vehicles);
}

TEST(Simulate, DriversStillWithoutRebalancing) {
  UniformSampler rng(3);
  const StationNetwork net = random_network(rng, 5, 1.0, 1.0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 5);
  const SimTrace trace = simulate(net, zero, zero, Eigen::VectorXd::Constant(5, 0.1),
                                  Eigen::VectorXd::Constant(5, 1.0), Eigen::VectorXd::Constant(5, 0.7), 120.0, 0.2);
  EXPECT_EQ(trace.max_driver_drift, 0.0);
  EXPECT_TRUE(trace.final_state.r.isConstant(0.7, 0.0));
}

TEST(Simulate, ConservationAndNonnegativityOnRandomRuns) {
  UniformSampler rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 5;
    const StationNetwork net = random_network(rng, n, 1.0, 2.0);
    const RebalanceSolution sol = solve_rebalancing(net);
    ASSERT_EQ(sol.status, RebalanceStatus::optimal);
    Eigen::VectorXd c0(n), v0(n), r0(n);
    for (int i = 0; i < n; ++i) {
      c0(i) = rng.next(0.0, 0.2);
      v0(i) = rng.next(0.0, 0.5);
      r0(i) = rng.next(0.0, 0.3);
    }
    const double horizon = 2.0 * net.T.maxCoeff() + 10.0;
    for (double h : {0.2, 0.1}) {
      const SimTrace trace = simulate(net, sol.assignment.alpha, sol.assignment.beta, c0, v0, r0, horizon, h);
      const double tol = conservation_tolerance(net, sol.assignment.alpha, sol.assignment.beta, h);
      EXPECT_LE(trace.max_vehicle_drift, tol) << "trial " << trial << " h " << h;
      EXPECT_LE(trace.max_driver_drift, tol) << "trial " << trial << " h " << h;
      EXPECT_GE(trace.min_state, 0.0) << "trial " << trial << " h " << h;
      for (std::size_t k = 1; k < trace.samples.size(); ++k) {
        ASSERT_GT(trace.samples[k].time, trace.samples[k - 1].time);
      }
    }
  }
}

TEST(Simulate, FirstOrderConvergence) {
  // Customers queue at both stations and drain while vehicles circulate.
  // Travel time 1 is a whole number of steps at every resolution used here.
  const StationNetwork net = balanced_pair();
  const Eigen::Matrix2d zero = Eigen::Matrix2d::Zero();
  const Eigen::Vector2d c0(0.37, 0.21), v0(0.83, 0.55), r0 = Eigen::Vector2d::Zero();
  SimOptions options;
  options.sample_interval = 0.25;
  const auto run = [&](double h) { return simulate(net, zero, zero, c0, v0, r0, 4.0, h, options); };
  const SimTrace coarse = run(1.0 / 40), mid = run(1.0 / 80), fine = run(1.0 / 160), exact = run(1.0 / 1280);
  const auto error = [&](const SimTrace& trace) {
    double worst = 0.0;
    for (const TraceSample& s : exact.samples) {
      worst = std::max(worst, (stacked(sample_at(trace, s.time)) - stacked(s)).cwiseAbs().maxCoeff());
    }
    return worst;
  };
  const double e1 = error(coarse), e2 = error(mid), e3 = error(fine);
  ASSERT_GT(e1, 0.0);
  EXPECT_GE(e1 / e2, 1.5) << e1 << " " << e2;
  EXPECT_GE(e2 / e3, 1.5) << e2 << " " << e3;
}

TEST(Simulate, CustomersNeverGrowWhileServed) {
  // With idle vehicles and drivers everywhere throughout, queues only shrink.
  const StationNetwork net = symmetric_network();
  const Eigen::Matrix3d zero = Eigen::Matrix3d::Zero();
  const SimTrace trace = simulate(net, zero, zero, Eigen::Vector3d(0.4, 0.1, 0.0), Eigen::Vector3d::Constant(20.0),
                                  Eigen::Vector3d::Constant(1.0), 12.0, 0.05);
  for (std::size_t k = 1; k < trace.samples.size(); ++k) {
    ASSERT_GT(trace.samples[k].v.minCoeff(), 0.0);
    for (int i = 0; i < 3; ++i) EXPECT_LE(trace.samples[k].c(i), trace.samples[k - 1].c(i));
  }
  EXPECT_EQ(trace.final_state.c.maxCoeff(), 0.0);
}

TEST(Simulate, CsvLayout) {
  const StationNetwork net = balanced_pair();
  const Eigen::Matrix2d zero = Eigen::Matrix2d::Zero();
  SimOptions options;
  options.sample_interval = 1.0;
  const SimTrace trace = simulate(net, zero, zero, Eigen::Vector2d::Zero(), Eigen::Vector2d(2.0, 2.0),
                                  Eigen::Vector2d::Zero(), 4.0, 0.25, options);
  const std::string csv = trace_csv(trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,c_1,c_2,v_1,v_2,r_1,r_2,V_total,R_total");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), trace.samples.size() + 1);
}

TEST(StabilityProbe, TwoStationConverges) {
  const StationNetwork net = two_station_network();
  const RebalanceSolution sol = solve_rebalancing(net);
  const StabilityReport report = stability_probe(net, sol);
  EXPECT_TRUE(report.pass);
  EXPECT_TRUE(report.customers_cleared);
  EXPECT_TRUE(report.vehicles_positive);
  EXPECT_TRUE(report.drivers_positive);
  EXPECT_TRUE(report.conserved);
  // Queues empty by T' up to a few steps.
  EXPECT_LE(report.drain_time, report.drain_bound + 5.0 * 0.05);
}

TEST(StabilityProbe, RejectsUndersizedFleetBeforeSimulating) {
  const StationNetwork net = two_station_network();
  const RebalanceSolution sol = solve_rebalancing(net);
  StabilityOptions options;
  options.slack_v = -0.5;
  EXPECT_THROW(stability_probe(net, sol, options), InsufficientFleet);
  EXPECT_THROW(stability_probe_totals(net, sol, sol.assignment.v_alpha, 7.0), InsufficientFleet);
  EXPECT_THROW(stability_probe_totals(net, sol, 9.0, sol.assignment.r_alpha_beta), InsufficientFleet);
}

TEST(StabilityProbe, ExactEquilibriumIsStationary) {
  const StationNetwork net = two_station_network();
  const RebalanceSolution sol = solve_rebalancing(net);
  StabilityOptions options;
  options.perturbation = 0.0;
  const StabilityReport report = stability_probe(net, sol, options);
  EXPECT_TRUE(report.pass);
  const TraceSample& first = report.trace.samples.front();
  for (const TraceSample& s : report.trace.samples) {
    EXPECT_LE((stacked(s) - stacked(first)).cwiseAbs().maxCoeff(), 1e-9) << "t=" << s.time;
  }
}

TEST(StabilityProbe, GeneratedInstancesPass) {
  for (std::uint64_t seed : {1U, 2U}) {
    const StationNetwork net = generate_instance(10, seed);
    const RebalanceSolution sol = solve_rebalancing(net);
    StabilityOptions options;
    options.h = 0.1;
    const StabilityReport report = stability_probe(net, sol, options);
    EXPECT_TRUE(report.pass) << "seed " << seed;
  }
}
