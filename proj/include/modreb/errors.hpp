#pragma once

#include <stdexcept>
#include <string>

namespace modreb {

/// Malformed or out-of-contract input (dimension mismatch, bad flag, unbalanced supplies).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parsed instance or assignment violates one of its invariants.
/// `field()` names the offending field, e.g. "p row 3" or "mu[2]".
class ValidationError : public InvalidInput {
 public:
  ValidationError(std::string field, const std::string& what)
      : InvalidInput(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// An exhaustive routine was asked to run beyond its size limit.
class SizeLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Simulator state contains NaN or negative entries.
class InvalidState : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Scenario sizing admits no equilibrium (V <= V_alpha or R <= R_alpha_beta).
class InsufficientFleet : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace modreb
