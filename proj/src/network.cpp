#include "modreb/network.hpp"

#include <cmath>
#include <string>

namespace modreb {
namespace {

std::string at(const char* name, Eigen::Index i) {
  return std::string(name) + "[" + std::to_string(i + 1) + "]";
}

std::string at(const char* name, Eigen::Index i, Eigen::Index j) {
  return std::string(name) + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

void require_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw ValidationError(name, "expected " + std::to_string(n) + "x" + std::to_string(n) +
                                    " matrix, got " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()));
  }
}

}  // namespace

void validate(const StationNetwork& net) {
  const Eigen::Index n = net.size();
  if (n < 1) throw ValidationError("n", "must be positive");
  if (net.mu.size() != n) {
    throw ValidationError("mu", "expected length " + std::to_string(n));
  }
  require_square(net.p, n, "p");
  require_square(net.T, n, "T");
  require_square(net.f, n, "f");

  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = net.lambda(i);
    if (!std::isfinite(lam) || lam < 0.0) throw ValidationError(at("lambda", i), "must be finite and >= 0");
    if (!std::isfinite(net.mu(i))) throw ValidationError(at("mu", i), "must be finite");
    if (!(net.mu(i) > lam)) throw ValidationError(at("mu", i), "must exceed lambda (mu_i > lambda_i)");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = net.p(i, j), t = net.T(i, j), f = net.f(i, j);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw ValidationError(at("p", i, j), "must lie in [0,1]");
      if (!std::isfinite(t) || t < 0.0) throw ValidationError(at("T", i, j), "must be finite and >= 0");
      if (!std::isfinite(f) || f < 0.0) throw ValidationError(at("f", i, j), "must be finite and >= 0");
    }
    if (net.p(i, i) != 0.0) throw ValidationError(at("p", i, i), "diagonal must be 0");
    if (net.T(i, i) != 0.0) throw ValidationError(at("T", i, i), "diagonal must be 0");
    if (net.lambda(i) > 0.0) {
      const double row = net.p.row(i).sum();
      if (std::abs(row - 1.0) > kProbabilityTolerance) {
        throw ValidationError("p row " + std::to_string(i + 1),
                              "sums to " + std::to_string(row) + ", expected 1");
      }
    }
  }
}

ImbalanceVector compute_imbalance(const StationNetwork& net) {
  // p_ii = 0, so the full column sum equals the sum over j != i.
  return {net.p.transpose() * net.lambda - net.lambda};
}

Eigen::MatrixXd driver_capacity(const StationNetwork& net) {
  Eigen::MatrixXd cap = net.f.cwiseProduct(net.lambda.asDiagonal() * net.p);
  cap.diagonal().setZero();
  return cap;
}

void validate(const RebalanceAssignment& a, const StationNetwork& net) {
  const Eigen::Index n = net.size();
  require_square(a.alpha, n, "alpha");
  require_square(a.beta, n, "beta");
  const Eigen::MatrixXd cap = driver_capacity(net);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(a.alpha(i, j)) || a.alpha(i, j) < 0.0) {
        throw ValidationError(at("alpha", i, j), "must be finite and >= 0");
      }
      if (!std::isfinite(a.beta(i, j)) || a.beta(i, j) < 0.0) {
        throw ValidationError(at("beta", i, j), "must be finite and >= 0");
      }
      if (a.beta(i, j) > cap(i, j) + 1e-9) {
        throw ValidationError(at("beta", i, j), "exceeds capacity f_ij lambda_i p_ij");
      }
    }
    if (a.alpha(i, i) != 0.0) throw ValidationError(at("alpha", i, i), "diagonal must be 0");
    if (a.beta(i, i) != 0.0) throw ValidationError(at("beta", i, i), "diagonal must be 0");
  }
  const ImbalanceVector d = compute_imbalance(net);
  if (balance_residual(a.alpha, d.d) > kBalanceTolerance) {
    throw ValidationError("alpha", "violates sum_j (alpha_ij - alpha_ji) = D_i");
  }
  if (balance_residual(a.beta, -d.d) > kBalanceTolerance) {
    throw ValidationError("beta", "violates sum_j (beta_ij - beta_ji) = -D_i");
  }
  if (!std::isfinite(a.v_alpha) || a.v_alpha < 0.0) throw ValidationError("v_alpha", "must be finite and >= 0");
  if (!std::isfinite(a.r_alpha_beta) || a.r_alpha_beta < 0.0) {
    throw ValidationError("r_alpha_beta", "must be finite and >= 0");
  }
}

CutCheck check_feasibility_bruteforce(const StationNetwork& net, const ImbalanceVector& d) {
  const Eigen::Index n = net.size();
  if (n > kBruteForceMaxStations) {
    throw SizeLimitError("check_feasibility_bruteforce: n = " + std::to_string(n) + " exceeds " +
                         std::to_string(kBruteForceMaxStations) + "; use check_flow_feasibility");
  }
  if (d.size() != n) throw InvalidInput("check_feasibility_bruteforce: imbalance length mismatch");

  const Eigen::MatrixXd cap = driver_capacity(net);
  CutCheck result;
  std::uint32_t worst = 0;
  const std::uint32_t subsets = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    double deficit = 0.0;
    double capacity = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(mask >> i & 1U)) continue;
      deficit -= d.d(i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(mask >> j & 1U)) capacity += cap(i, j);
      }
    }
    const double violation = deficit - capacity;
    if (violation > 1e-9 && violation > result.violation) {
      result.feasible = false;
      result.violation = violation;
      worst = mask;
    }
  }
  if (!result.feasible) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (worst >> i & 1U) result.witness.push_back(static_cast<int>(i));
    }
  }
  return result;
}

}  // namespace modreb
