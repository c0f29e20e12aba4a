#pragma once

#include <algorithm>
#include <optional>

#include "modreb/mincostflow.hpp"
#include "modreb/network.hpp"

namespace modreb {

enum class RebalanceStatus { optimal, beta_infeasible };

struct AlphaSolution {
  Eigen::MatrixXd alpha;
  double objective = 0.0;
};

struct BetaSolution {
  RebalanceStatus status = RebalanceStatus::optimal;
  Eigen::MatrixXd beta;
  double objective = 0.0;
  /// Max-flow diagnosis; set when status is beta_infeasible.
  std::optional<FeasibilityDiagnosis> infeasibility;
};

struct RebalanceSolution {
  RebalanceStatus status = RebalanceStatus::optimal;
  RebalanceAssignment assignment;
  double objective_alpha = 0.0;
  double objective_beta = 0.0;
  std::optional<FeasibilityDiagnosis> infeasibility;
};

/// Uncapacitated transshipment over all ordered pairs i != j with cost T_ij and supply D_i.
FlowProblem alpha_flow_problem(const StationNetwork& net, const ImbalanceVector& d);

/// Capacitated transshipment with supply -D_i and capacity f_ij lambda_i p_ij;
/// arcs of zero capacity are omitted.
FlowProblem beta_flow_problem(const StationNetwork& net, const ImbalanceVector& d);

/// Scatters per-arc flows back into an n x n matrix.
Eigen::MatrixXd flow_matrix(const FlowProblem& problem, const Eigen::VectorXd& flow);

/// Subtracts min(x_ij, x_ji) from both entries of every opposing pair.
/// Net outflows are unchanged and no cost is added.
template <typename Derived>
void cancel_two_cycles(Eigen::MatrixBase<Derived>& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
      const auto common = std::min(x(i, j), x(j, i));
      x(i, j) -= common;
      x(j, i) -= common;
    }
  }
}

/// Minimizes sum T_ij alpha_ij subject to sum_j (alpha_ij - alpha_ji) = D_i, alpha >= 0.
AlphaSolution solve_alpha(const StationNetwork& net, const ImbalanceVector& d);

/// Minimizes sum T_ij beta_ij subject to sum_j (beta_ij - beta_ji) = -D_i,
/// 0 <= beta_ij <= f_ij lambda_i p_ij.
BetaSolution solve_beta(const StationNetwork& net, const ImbalanceVector& d);

/// Imbalance, both programs and the resulting fleet sizes.
RebalanceSolution solve_rebalancing(const StationNetwork& net);

}  // namespace modreb
