#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modreb/errors.hpp"

namespace modreb {

/// Probability normalizations (rows of p) are checked to this absolute tolerance.
inline constexpr double kProbabilityTolerance = 1e-9;
/// Flow-balance equalities are checked to this absolute tolerance.
inline constexpr double kBalanceTolerance = 1e-7;

struct GeneratorConfig {
  double env_size = 100.0;
  double lambda_min = 0.0;
  double lambda_max = 0.05;
  double f_value = 1.0;
  double mu_factor = 2.0;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

struct InstanceMeta {
  std::optional<std::uint64_t> seed;
  std::optional<GeneratorConfig> generator_config;

  friend bool operator==(const InstanceMeta&, const InstanceMeta&) = default;
};

/// A mobility-on-demand network of n stations.
///
/// `lambda` are customer arrival rates, `mu` the departure rates while customers
/// queue, `p` destination probabilities, `T` travel times and `f` the fraction
/// (or multiplicity, when > 1) of customer trips a rebalancing driver may ride.
struct StationNetwork {
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  Eigen::MatrixXd p;
  Eigen::MatrixXd T;
  Eigen::MatrixXd f;
  InstanceMeta meta;

  Eigen::Index size() const { return lambda.size(); }

  friend bool operator==(const StationNetwork& a, const StationNetwork& b) {
    return same(a.lambda, b.lambda) && same(a.mu, b.mu) && same(a.p, b.p) && same(a.T, b.T) &&
           same(a.f, b.f) && a.meta == b.meta;
  }

 private:
  template <typename M>
  static bool same(const M& x, const M& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  }
};

/// Throws ValidationError naming the first violated invariant.
void validate(const StationNetwork& net);

/// Net rate of vehicle surplus per station; sums to zero on a valid network.
struct ImbalanceVector {
  Eigen::VectorXd d;

  Eigen::Index size() const { return d.size(); }
};

ImbalanceVector compute_imbalance(const StationNetwork& net);

struct RebalanceAssignment {
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  double v_alpha = 0.0;
  double r_alpha_beta = 0.0;
};

struct FleetSizes {
  double v_alpha = 0.0;
  double r_alpha_beta = 0.0;
};

/// V_alpha = sum T_ij (p_ij lambda_i + alpha_ij), R_alpha_beta = sum T_ij (alpha_ij + beta_ij).
template <typename DerivedA, typename DerivedB>
FleetSizes fleet_sizes(const StationNetwork& net, const Eigen::MatrixBase<DerivedA>& alpha,
                       const Eigen::MatrixBase<DerivedB>& beta) {
  const Eigen::Index n = net.size();
  if (alpha.rows() != n || alpha.cols() != n || beta.rows() != n || beta.cols() != n) {
    throw InvalidInput("fleet_sizes: assignment matrices must be " + std::to_string(n) + "x" +
                       std::to_string(n));
  }
  const Eigen::MatrixXd customer = net.lambda.asDiagonal() * net.p;
  const double rebalancing = net.T.cwiseProduct(alpha.derived()).sum();
  return {net.T.cwiseProduct(customer).sum() + rebalancing,
          rebalancing + net.T.cwiseProduct(beta.derived()).sum()};
}

/// Row i of the result is sum_j (x_ij - x_ji), the net outflow at node i.
template <typename Derived>
Eigen::VectorXd net_outflow(const Eigen::MatrixBase<Derived>& x) {
  return x.rowwise().sum() - x.colwise().sum().transpose();
}

/// Infinity-norm of net_outflow(x) - target.
template <typename Derived>
double balance_residual(const Eigen::MatrixBase<Derived>& x, const Eigen::VectorXd& target) {
  return (net_outflow(x) - target).cwiseAbs().maxCoeff();
}

/// beta-program arc capacities f_ij lambda_i p_ij (zero diagonal).
Eigen::MatrixXd driver_capacity(const StationNetwork& net);

/// Checks the RebalanceAssignment invariants against `net`; throws ValidationError.
void validate(const RebalanceAssignment& a, const StationNetwork& net);

struct CutCheck {
  bool feasible = true;
  /// Most violated station subset (0-based, ascending) when infeasible.
  std::vector<int> witness;
  /// -sum_{S} D_i minus the capacity leaving S, for the witness.
  double violation = 0.0;
};

inline constexpr int kBruteForceMaxStations = 20;

/// Enumerates all 2^n subsets S and tests -sum_{i in S} D_i <= sum_{i in S, j notin S} f_ij lambda_i p_ij.
/// Throws SizeLimitError when n > kBruteForceMaxStations.
CutCheck check_feasibility_bruteforce(const StationNetwork& net, const ImbalanceVector& d);

}  // namespace modreb
