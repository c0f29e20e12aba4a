#include "modreb/generator.hpp"

#include <cmath>

namespace modreb {

void validate(const GeneratorConfig& config) {
  if (!(config.env_size > 0.0) || !std::isfinite(config.env_size)) {
    throw ValidationError("env_size", "must be positive");
  }
  if (!(config.lambda_min >= 0.0) || !(config.lambda_max >= config.lambda_min) ||
      !std::isfinite(config.lambda_max)) {
    throw ValidationError("lambda", "need 0 <= lambda_min <= lambda_max");
  }
  if (!(config.f_value >= 0.0) || !std::isfinite(config.f_value)) {
    throw ValidationError("f", "must be finite and >= 0");
  }
  if (!(config.mu_factor > 1.0) || !std::isfinite(config.mu_factor)) {
    throw ValidationError("mu_factor", "must exceed 1 so that mu_i > lambda_i");
  }
}

StationNetwork generate_instance(int n, std::uint64_t seed, const GeneratorConfig& config) {
  if (n < 2) throw InvalidInput("generate_instance: n must be >= 2, got " + std::to_string(n));
  validate(config);

  UniformSampler rng(seed);
  Eigen::MatrixX2d xy(n, 2);
  for (int i = 0; i < n; ++i) {
    xy(i, 0) = rng.next(0.0, config.env_size);
    xy(i, 1) = rng.next(0.0, config.env_size);
  }

  StationNetwork net;
  net.lambda.resize(n);
  for (int i = 0; i < n; ++i) net.lambda(i) = rng.next(config.lambda_min, config.lambda_max);

  net.p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i) net.p(i, j) = rng.next();
    }
    const double total = net.p.row(i).sum();
    if (total > 0.0) {
      net.p.row(i) /= total;
    } else {
      net.p.row(i).setConstant(1.0 / (n - 1));
      net.p(i, i) = 0.0;
    }
  }

  net.T = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = (xy.row(i) - xy.row(j)).norm();
      net.T(i, j) = dist;
      net.T(j, i) = dist;
    }
  }

  net.f = Eigen::MatrixXd::Constant(n, n, config.f_value);
  // mu only matters to the simulator; a station that never sees customers still
  // needs mu_i > lambda_i = 0.
  net.mu = config.mu_factor * net.lambda;
  for (int i = 0; i < n; ++i) {
    if (net.lambda(i) == 0.0) net.mu(i) = config.mu_factor * config.lambda_max + 1e-12;
  }

  net.meta.seed = seed;
  net.meta.generator_config = config;
  return net;
}

}  // namespace modreb
