#include "modreb/rebalancer.hpp"

#include <algorithm>

namespace modreb {
namespace {

void require_matching(const StationNetwork& net, const ImbalanceVector& d) {
  if (d.size() != net.size()) {
    throw InvalidInput("imbalance has " + std::to_string(d.size()) + " entries for " +
                       std::to_string(net.size()) + " stations");
  }
}

}  // namespace

FlowProblem alpha_flow_problem(const StationNetwork& net, const ImbalanceVector& d) {
  require_matching(net, d);
  const int n = static_cast<int>(net.size());
  FlowProblem problem{n, d.d, {}};
  problem.arcs.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) problem.arcs.push_back({i, j, net.T(i, j), kInfiniteCapacity});
    }
  }
  return problem;
}

FlowProblem beta_flow_problem(const StationNetwork& net, const ImbalanceVector& d) {
  require_matching(net, d);
  const int n = static_cast<int>(net.size());
  const Eigen::MatrixXd cap = driver_capacity(net);
  FlowProblem problem{n, -d.d, {}};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && cap(i, j) > 0.0) problem.arcs.push_back({i, j, net.T(i, j), cap(i, j)});
    }
  }
  return problem;
}

Eigen::MatrixXd flow_matrix(const FlowProblem& problem, const Eigen::VectorXd& flow) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(problem.node_count, problem.node_count);
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    x(problem.arcs[a].from, problem.arcs[a].to) += flow(static_cast<Eigen::Index>(a));
  }
  return x;
}

AlphaSolution solve_alpha(const StationNetwork& net, const ImbalanceVector& d) {
  const FlowProblem problem = alpha_flow_problem(net, d);
  const FlowSolution flow = solve_mcf(problem);
  if (flow.status != FlowStatus::optimal) {
    // Unreachable for a valid network: every pair is connected without capacity.
    throw std::logic_error("solve_alpha: uncapacitated program reported infeasible");
  }
  AlphaSolution solution{flow_matrix(problem, flow.flow), 0.0};
  cancel_two_cycles(solution.alpha);
  solution.objective = net.T.cwiseProduct(solution.alpha).sum();
  return solution;
}

BetaSolution solve_beta(const StationNetwork& net, const ImbalanceVector& d) {
  const FlowProblem problem = beta_flow_problem(net, d);
  const FlowSolution flow = solve_mcf(problem);
  const auto n = net.size();
  if (flow.status != FlowStatus::optimal) {
    return {RebalanceStatus::beta_infeasible, Eigen::MatrixXd::Zero(n, n), 0.0,
            diagnose_flow_feasibility(problem)};
  }
  BetaSolution solution{RebalanceStatus::optimal, flow_matrix(problem, flow.flow), 0.0, std::nullopt};
  cancel_two_cycles(solution.beta);
  solution.objective = net.T.cwiseProduct(solution.beta).sum();
  return solution;
}

RebalanceSolution solve_rebalancing(const StationNetwork& net) {
  validate(net);
  const ImbalanceVector d = compute_imbalance(net);
  AlphaSolution alpha = solve_alpha(net, d);
  BetaSolution beta = solve_beta(net, d);

  RebalanceSolution solution;
  solution.status = beta.status;
  solution.infeasibility = std::move(beta.infeasibility);
  solution.objective_alpha = alpha.objective;
  solution.objective_beta = beta.objective;
  solution.assignment.alpha = std::move(alpha.alpha);
  solution.assignment.beta = std::move(beta.beta);
  const FleetSizes sizes = fleet_sizes(net, solution.assignment.alpha, solution.assignment.beta);
  solution.assignment.v_alpha = sizes.v_alpha;
  solution.assignment.r_alpha_beta = sizes.r_alpha_beta;
  return solution;
}

}  // namespace modreb
