#include "modreb/mincostflow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace modreb {
namespace {

// Residual capacities at or below this are treated as saturated.
constexpr double kResidualEpsilon = 1e-13;
constexpr double kUnreached = std::numeric_limits<double>::infinity();

struct Edge {
  int to;
  int rev;
  double residual;
  double cost;
  int arc;  // index into FlowProblem::arcs for forward arcs, -1 otherwise
};

/// Residual network over the problem's nodes plus a super-source and super-sink.
class ResidualNetwork {
 public:
  explicit ResidualNetwork(const FlowProblem& problem)
      : source_(problem.node_count), sink_(problem.node_count + 1), adj_(problem.node_count + 2) {
    for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
      const Arc& arc = problem.arcs[a];
      add_edge(arc.from, arc.to, arc.capacity, arc.cost, static_cast<int>(a));
    }
    for (int v = 0; v < problem.node_count; ++v) {
      const double s = problem.supply(v);
      if (s > 0.0) {
        add_edge(source_, v, s, 0.0, -1);
        total_supply_ += s;
      } else if (s < 0.0) {
        add_edge(v, sink_, -s, 0.0, -1);
      }
    }
  }

  int source() const { return source_; }
  int sink() const { return sink_; }
  int node_count() const { return static_cast<int>(adj_.size()); }
  double total_supply() const { return total_supply_; }
  std::vector<Edge>& edges(int v) { return adj_[v]; }
  const std::vector<Edge>& edges(int v) const { return adj_[v]; }

  void push(Edge& e, double amount) {
    if (e.residual != kInfiniteCapacity) e.residual -= amount;
    Edge& back = adj_[e.to][e.rev];
    if (back.residual != kInfiniteCapacity) back.residual += amount;
  }

  double routed() const {
    double sum = 0.0;
    for (const Edge& e : adj_[source_]) sum += adj_[e.to][e.rev].residual;
    return sum;
  }

  Eigen::VectorXd arc_flows(std::size_t arc_count) const {
    Eigen::VectorXd flow = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arc_count));
    for (const auto& list : adj_) {
      for (const Edge& e : list) {
        if (e.arc >= 0) flow(e.arc) = adj_[e.to][e.rev].residual;
      }
    }
    return flow;
  }

  std::vector<bool> reachable_from_source() const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<int> stack{source_};
    seen[source_] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const Edge& e : adj_[u]) {
        if (e.residual > kResidualEpsilon && !seen[e.to]) {
          seen[e.to] = true;
          stack.push_back(e.to);
        }
      }
    }
    return seen;
  }

 private:
  void add_edge(int from, int to, double capacity, double cost, int arc) {
    const int forward_index = static_cast<int>(adj_[from].size());
    const int backward_index = static_cast<int>(adj_[to].size()) + (from == to ? 1 : 0);
    adj_[from].push_back({to, backward_index, capacity, cost, arc});
    adj_[to].push_back({from, forward_index, 0.0, -cost, -1});
  }

  int source_;
  int sink_;
  std::vector<std::vector<Edge>> adj_;
  double total_supply_ = 0.0;
};

/// Dinic's blocking-flow max flow on the residual network.
class MaxFlow {
 public:
  explicit MaxFlow(ResidualNetwork& g) : g_(g), level_(g.node_count()), next_(g.node_count()) {}

  double run() {
    double total = 0.0;
    while (build_levels()) {
      std::fill(next_.begin(), next_.end(), 0);
      while (true) {
        const double pushed = augment(g_.source(), kInfiniteCapacity);
        if (pushed <= kResidualEpsilon) break;
        total += pushed;
      }
    }
    return total;
  }

 private:
  bool build_levels() {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{g_.source()};
    level_[g_.source()] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (const Edge& e : g_.edges(u)) {
        if (e.residual > kResidualEpsilon && level_[e.to] < 0) {
          level_[e.to] = level_[u] + 1;
          queue.push_back(e.to);
        }
      }
    }
    return level_[g_.sink()] >= 0;
  }

  double augment(int u, double limit) {
    if (u == g_.sink()) return limit;
    auto& list = g_.edges(u);
    for (int& i = next_[u]; i < static_cast<int>(list.size()); ++i) {
      Edge& e = list[i];
      if (e.residual <= kResidualEpsilon || level_[e.to] != level_[u] + 1) continue;
      const double pushed = augment(e.to, std::min(limit, e.residual));
      if (pushed > kResidualEpsilon) {
        g_.push(e, pushed);
        return pushed;
      }
    }
    return 0.0;
  }

  ResidualNetwork& g_;
  std::vector<int> level_;
  std::vector<int> next_;
};

}  // namespace

void validate(const FlowProblem& problem) {
  if (problem.node_count <= 0) throw InvalidInput("FlowProblem: node_count must be positive");
  if (problem.supply.size() != problem.node_count) {
    throw InvalidInput("FlowProblem: supply has " + std::to_string(problem.supply.size()) +
                       " entries for " + std::to_string(problem.node_count) + " nodes");
  }
  if (!problem.supply.allFinite()) throw InvalidInput("FlowProblem: supplies must be finite");
  const double imbalance = problem.supply.sum();
  if (std::abs(imbalance) > kSupplyTolerance) {
    throw InvalidInput("FlowProblem: supplies sum to " + std::to_string(imbalance) + ", expected 0");
  }
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    const Arc& arc = problem.arcs[a];
    const std::string where = "FlowProblem: arc " + std::to_string(a);
    if (arc.from < 0 || arc.from >= problem.node_count || arc.to < 0 || arc.to >= problem.node_count) {
      throw InvalidInput(where + " has an endpoint out of range");
    }
    if (!std::isfinite(arc.cost) || arc.cost < 0.0) throw InvalidInput(where + " needs a finite cost >= 0");
    if (!(arc.capacity >= 0.0) || std::isinf(arc.capacity)) {
      throw InvalidInput(where + " needs capacity >= 0 (use kInfiniteCapacity for none)");
    }
  }
}

FlowSolution solve_mcf(const FlowProblem& problem) {
  validate(problem);
  ResidualNetwork g(problem);
  const int nodes = g.node_count();
  const int s = g.source();
  const int t = g.sink();

  std::vector<double> potential(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<bool> done(nodes);
  std::vector<std::pair<int, int>> via(nodes);  // (node, edge index) of the tree edge into v

  double remaining = g.total_supply();
  const std::size_t iteration_limit = 64 * (problem.arcs.size() + static_cast<std::size_t>(nodes)) + 1024;
  std::size_t iteration = 0;
  while (remaining >= kSupplyTolerance) {
    if (++iteration > iteration_limit) throw std::logic_error("solve_mcf: augmentation did not terminate");

    std::fill(dist.begin(), dist.end(), kUnreached);
    std::fill(done.begin(), done.end(), false);
    dist[s] = 0.0;
    double farthest = 0.0;
    while (true) {
      int u = -1;
      for (int v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kUnreached && (u < 0 || dist[v] < dist[u])) u = v;
      }
      if (u < 0) break;
      done[u] = true;
      farthest = std::max(farthest, dist[u]);
      const auto& list = g.edges(u);
      for (int k = 0; k < static_cast<int>(list.size()); ++k) {
        const Edge& e = list[k];
        if (e.residual <= kResidualEpsilon || done[e.to]) continue;
        const double reduced = std::max(0.0, e.cost + potential[u] - potential[e.to]);
        const double candidate = dist[u] + reduced;
        if (candidate < dist[e.to]) {
          dist[e.to] = candidate;
          via[e.to] = {u, k};
        }
      }
    }
    if (!done[t]) break;

    for (int v = 0; v < nodes; ++v) potential[v] += done[v] ? dist[v] : farthest;

    double bottleneck = remaining;
    for (int v = t; v != s; v = via[v].first) {
      bottleneck = std::min(bottleneck, g.edges(via[v].first)[via[v].second].residual);
    }
    for (int v = t; v != s; v = via[v].first) {
      g.push(g.edges(via[v].first)[via[v].second], bottleneck);
    }
    remaining = g.total_supply() - g.routed();
  }

  FlowSolution solution;
  solution.flow = g.arc_flows(problem.arcs.size());
  solution.status = remaining < kSupplyTolerance ? FlowStatus::optimal : FlowStatus::infeasible;
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    solution.objective += problem.arcs[a].cost * solution.flow(static_cast<Eigen::Index>(a));
  }
  return solution;
}

FeasibilityDiagnosis diagnose_flow_feasibility(const FlowProblem& problem) {
  validate(problem);
  ResidualNetwork g(problem);
  FeasibilityDiagnosis diagnosis;
  diagnosis.total_supply = g.total_supply();
  diagnosis.max_flow = MaxFlow(g).run();
  diagnosis.feasible = diagnosis.total_supply - diagnosis.max_flow < kSupplyTolerance;
  const std::vector<bool> reach = g.reachable_from_source();
  for (int v = 0; v < problem.node_count; ++v) {
    if (reach[v]) diagnosis.source_side.push_back(v);
  }
  return diagnosis;
}

bool check_flow_feasibility(const FlowProblem& problem) {
  return diagnose_flow_feasibility(problem).feasible;
}

Eigen::VectorXd node_imbalance(const FlowProblem& problem, const Eigen::VectorXd& flow) {
  Eigen::VectorXd balance = -problem.supply;
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    const double x = flow(static_cast<Eigen::Index>(a));
    balance(problem.arcs[a].from) += x;
    balance(problem.arcs[a].to) -= x;
  }
  return balance;
}

}  // namespace modreb
