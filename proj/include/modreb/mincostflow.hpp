#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

#include "modreb/errors.hpp"

namespace modreb {

/// Capacity sentinel for uncapacitated arcs. Never used in arithmetic.
inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::max();

/// Supplies must sum to zero within this tolerance, and the solver stops once
/// the unrouted supply drops below it.
inline constexpr double kSupplyTolerance = 1e-9;

struct Arc {
  int from = 0;
  int to = 0;
  double cost = 0.0;
  double capacity = kInfiniteCapacity;

  bool uncapacitated() const { return capacity == kInfiniteCapacity; }
};

/// Single-commodity transshipment problem. supply(v) > 0 marks a source,
/// supply(v) < 0 a sink.
struct FlowProblem {
  int node_count = 0;
  Eigen::VectorXd supply;
  std::vector<Arc> arcs;
};

enum class FlowStatus { optimal, infeasible };

struct FlowSolution {
  FlowStatus status = FlowStatus::infeasible;
  Eigen::VectorXd flow;  // per arc, same order as FlowProblem::arcs
  double objective = 0.0;
};

/// Throws InvalidInput on bad indices, negative costs/capacities or unbalanced supplies.
void validate(const FlowProblem& problem);

/// Successive shortest augmenting paths with node potentials. Dijkstra selects
/// the lowest-index node among equal tentative distances, so results are
/// deterministic. An infeasible problem yields status infeasible and the
/// partial flow reached when no augmenting path remained.
FlowSolution solve_mcf(const FlowProblem& problem);

struct FeasibilityDiagnosis {
  bool feasible = true;
  double total_supply = 0.0;
  double max_flow = 0.0;
  /// Nodes reachable from the super-source in the final residual graph. When
  /// infeasible, their supply exceeds the capacity leaving them.
  std::vector<int> source_side;
};

/// Max flow from a super-source (feeding every supply node) to a super-sink
/// (drained by every demand node); feasible iff it carries the total supply.
FeasibilityDiagnosis diagnose_flow_feasibility(const FlowProblem& problem);

bool check_flow_feasibility(const FlowProblem& problem);

/// Net outflow minus supply at each node.
Eigen::VectorXd node_imbalance(const FlowProblem& problem, const Eigen::VectorXd& flow);

}  // namespace modreb
