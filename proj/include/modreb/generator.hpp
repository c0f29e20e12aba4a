#pragma once

#include <cstdint>
#include <random>

#include "modreb/network.hpp"

namespace modreb {

/// Deterministic uniform sampler shared by every randomized routine.
///
/// Wraps std::mt19937_64 and converts its output to [0, 1) with 53 random bits,
/// so streams are reproducible across standard libraries (std::uniform_real_distribution
/// is implementation-defined).
class UniformSampler {
 public:
  explicit UniformSampler(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double next(double lo, double hi) { return lo + (hi - lo) * next(); }

 private:
  std::mt19937_64 engine_;
};

/// Random Euclidean instance: n stations uniform in an env_size square, T_ij the
/// Euclidean distance, lambda_i uniform on [lambda_min, lambda_max), p rows from
/// n-1 uniform(0,1) draws normalized to 1, f_ij = f_value, mu_i = mu_factor * lambda_i.
///
/// Sampling order is fixed: all coordinates (x then y per station), then all
/// lambda, then p row by row.
StationNetwork generate_instance(int n, std::uint64_t seed, const GeneratorConfig& config = {});

/// Throws ValidationError on an unusable configuration.
void validate(const GeneratorConfig& config);

}  // namespace modreb
