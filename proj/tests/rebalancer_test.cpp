#include <gtest/gtest.h>

#include "modreb/generator.hpp"
#include "modreb/rebalancer.hpp"
#include "oracles.hpp"

using namespace modreb;
using modreb::testing::brute_force_mcf;
using modreb::testing::random_network;
using modreb::testing::symmetric_network;
using modreb::testing::two_station_network;

namespace {

bool two_cycle_free(const Eigen::MatrixXd& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
      if (std::min(x(i, j), x(j, i)) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

TEST(SolveAlpha, TwoStationUniqueDirection) {
  const StationNetwork net = two_station_network();
  const AlphaSolution a = solve_alpha(net, compute_imbalance(net));
  EXPECT_NEAR(a.alpha(1, 0), 0.3, 1e-12);
  EXPECT_EQ(a.alpha(0, 1), 0.0);
  EXPECT_NEAR(a.objective, 3.0, 1e-12);
}

TEST(SolveAlpha, BalancedNetworkNeedsNothing) {
  const StationNetwork net = symmetric_network();
  const AlphaSolution a = solve_alpha(net, compute_imbalance(net));
  EXPECT_TRUE(a.alpha.isZero(0.0));
  EXPECT_EQ(a.objective, 0.0);
}

TEST(SolveBeta, TwoStationUniqueDirection) {
  const StationNetwork net = two_station_network();
  const BetaSolution b = solve_beta(net, compute_imbalance(net));
  ASSERT_EQ(b.status, RebalanceStatus::optimal);
  EXPECT_NEAR(b.beta(0, 1), 0.3, 1e-12);
  EXPECT_EQ(b.beta(1, 0), 0.0);
  EXPECT_NEAR(b.objective, 3.0, 1e-12);
}

TEST(SolveBeta, HalfWillingnessIsInfeasible) {
  const StationNetwork net = two_station_network(0.5);
  const BetaSolution b = solve_beta(net, compute_imbalance(net));
  EXPECT_EQ(b.status, RebalanceStatus::beta_infeasible);
  ASSERT_TRUE(b.infeasibility.has_value());
  EXPECT_NEAR(b.infeasibility->max_flow, 0.2, 1e-12);
  EXPECT_EQ(b.infeasibility->source_side, std::vector<int>{0});
}

TEST(SolveBeta, BalancedNetworkNeedsNothing) {
  const StationNetwork net = symmetric_network();
  const BetaSolution b = solve_beta(net, compute_imbalance(net));
  ASSERT_EQ(b.status, RebalanceStatus::optimal);
  EXPECT_TRUE(b.beta.isZero(0.0));
}

TEST(SolveRebalancing, TwoStationFleetSizes) {
  const RebalanceSolution s = solve_rebalancing(two_station_network());
  ASSERT_EQ(s.status, RebalanceStatus::optimal);
  EXPECT_NEAR(s.assignment.v_alpha, 8.0, 1e-12);
  EXPECT_NEAR(s.assignment.r_alpha_beta, 6.0, 1e-12);
  EXPECT_NEAR(s.assignment.r_alpha_beta, s.objective_alpha + s.objective_beta, 1e-12);
}

TEST(SolveRebalancing, PropagatesInfeasibility) {
  const RebalanceSolution s = solve_rebalancing(two_station_network(0.5));
  EXPECT_EQ(s.status, RebalanceStatus::beta_infeasible);
  EXPECT_TRUE(s.infeasibility.has_value());
}

TEST(SolveRebalancing, GeneratedInstanceWithUnitWillingness) {
  const StationNetwork net = generate_instance(100, 42);
  const RebalanceSolution s = solve_rebalancing(net);
  ASSERT_EQ(s.status, RebalanceStatus::optimal);
  EXPECT_NO_THROW(validate(s.assignment, net));
  const ImbalanceVector d = compute_imbalance(net);
  EXPECT_LE(balance_residual(s.assignment.alpha, d.d), 1e-7);
  EXPECT_LE(balance_residual(s.assignment.beta, -d.d), 1e-7);
  EXPECT_TRUE(two_cycle_free(s.assignment.alpha));
  EXPECT_TRUE(two_cycle_free(s.assignment.beta));
}

TEST(SolveRebalancing, MatchesOracleOnSmallNetworks) {
  UniformSampler rng(31);
  int infeasible = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 3 + trial % 2;  // at most 12 arcs
    const StationNetwork net = random_network(rng, n, 0.0, 1.2);
    const ImbalanceVector d = compute_imbalance(net);

    const AlphaSolution a = solve_alpha(net, d);
    const FlowSolution alpha_oracle = brute_force_mcf(alpha_flow_problem(net, d));
    ASSERT_EQ(alpha_oracle.status, FlowStatus::optimal);
    EXPECT_NEAR(a.objective, alpha_oracle.objective, 1e-3 * (1.0 + alpha_oracle.objective)) << "trial " << trial;

    const BetaSolution b = solve_beta(net, d);
    const FlowSolution beta_oracle = brute_force_mcf(beta_flow_problem(net, d));
    const bool oracle_feasible = beta_oracle.status == FlowStatus::optimal;
    EXPECT_EQ(b.status == RebalanceStatus::optimal, oracle_feasible) << "trial " << trial;
    // Infeasibility coincides with the cut condition.
    EXPECT_EQ(oracle_feasible, check_feasibility_bruteforce(net, d).feasible) << "trial " << trial;
    if (!oracle_feasible) {
      ++infeasible;
      continue;
    }
    EXPECT_NEAR(b.objective, beta_oracle.objective, 1e-3 * (1.0 + beta_oracle.objective)) << "trial " << trial;
  }
  EXPECT_GT(infeasible, 0);
}

TEST(SolveRebalancing, InvariantsOnRandomNetworks) {
  UniformSampler rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 25;
    const StationNetwork net = random_network(rng, n, 1.0, 2.0);
    const RebalanceSolution s = solve_rebalancing(net);
    ASSERT_EQ(s.status, RebalanceStatus::optimal) << "trial " << trial;
    const ImbalanceVector d = compute_imbalance(net);
    EXPECT_LE(balance_residual(s.assignment.alpha, d.d), 1e-7);
    EXPECT_LE(balance_residual(s.assignment.beta, -d.d), 1e-7);
    EXPECT_GE(s.assignment.alpha.minCoeff(), 0.0);
    EXPECT_GE(s.assignment.beta.minCoeff(), 0.0);
    EXPECT_TRUE(s.assignment.alpha.diagonal().isZero(0.0));
    EXPECT_TRUE(two_cycle_free(s.assignment.alpha)) << "trial " << trial;
    EXPECT_TRUE(two_cycle_free(s.assignment.beta)) << "trial " << trial;
    EXPECT_LE((s.assignment.beta - driver_capacity(net)).maxCoeff(), 1e-9);
    EXPECT_NEAR(s.assignment.r_alpha_beta, s.objective_alpha + s.objective_beta,
                1e-9 * (1.0 + s.assignment.r_alpha_beta));
  }
}

TEST(SolveRebalancing, RelaxingWillingnessNeverRaisesBetaCost) {
  UniformSampler rng(55);
  for (int trial = 0; trial < 80; ++trial) {
    const int n = 2 + trial % 12;
    StationNetwork net = random_network(rng, n, 1.0, 1.5);
    const ImbalanceVector d = compute_imbalance(net);
    const BetaSolution before = solve_beta(net, d);
    ASSERT_EQ(before.status, RebalanceStatus::optimal);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) net.f(i, j) += rng.next(0.0, 1.0);
    }
    const BetaSolution after = solve_beta(net, d);
    ASSERT_EQ(after.status, RebalanceStatus::optimal);
    EXPECT_LE(after.objective, before.objective + 1e-9) << "trial " << trial;
  }
}

TEST(SolveRebalancing, TravelTimeScaling) {
  UniformSampler rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const StationNetwork net = random_network(rng, 12, 1.0, 1.0);
    StationNetwork doubled = net;
    doubled.T *= 2.0;
    const RebalanceSolution s = solve_rebalancing(net);
    const RebalanceSolution t = solve_rebalancing(doubled);
    ASSERT_EQ(t.status, RebalanceStatus::optimal);
    EXPECT_NEAR(t.objective_alpha, 2.0 * s.objective_alpha, 1e-9 * (1.0 + s.objective_alpha));
    EXPECT_NEAR(t.objective_beta, 2.0 * s.objective_beta, 1e-9 * (1.0 + s.objective_beta));
    EXPECT_NEAR(t.assignment.v_alpha, 2.0 * s.assignment.v_alpha, 1e-9 * s.assignment.v_alpha);
    // Exact doubling keeps every comparison, so the argmin is unchanged.
    EXPECT_TRUE(t.assignment.alpha.isApprox(s.assignment.alpha) ||
                (t.assignment.alpha - s.assignment.alpha).norm() < 1e-12);
  }
}

TEST(CancelTwoCycles, KeepsNetOutflowAndZeroesOneSide) {
  Eigen::Matrix3d x;
  x << 0.0, 0.5, 0.1, 0.2, 0.0, 0.4, 0.3, 0.4, 0.0;
  const Eigen::VectorXd before = net_outflow(x);
  cancel_two_cycles(x);
  EXPECT_TRUE(net_outflow(x).isApprox(before));
  EXPECT_TRUE(two_cycle_free(x));
  EXPECT_NEAR(x(0, 1), 0.3, 1e-15);
  EXPECT_EQ(x(1, 2), 0.0);
  EXPECT_EQ(x(2, 1), 0.0);
}
