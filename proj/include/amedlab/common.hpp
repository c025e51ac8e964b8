#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace amedlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an argument lies outside the mathematical domain of an operation
/// (non-positive time, s >= t, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for invalid tuning parameters (rho <= 0, r outside (0,1], ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite inputs or activations encountered during an evaluation.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver or integrator produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration, checkpoint or data file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API precondition that is not a numeric domain issue.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace amedlab
