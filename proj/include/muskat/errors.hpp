#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace muskat {

/// Invalid input, configuration or violated precondition.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
  ConfigError(const std::string& what, std::vector<std::string> fields)
      : std::invalid_argument(what), fields_(std::move(fields)) {}

  /// Names of the offending fields, when known.
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// Base class for failures of a numerical procedure on valid input.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A kernel or integrand produced a non-finite value.
class EvaluationError : public NumericalError {
 public:
  EvaluationError(const std::string& what, double node)
      : NumericalError(what), node_(node) {}
  double node() const { return node_; }

 private:
  double node_;
};

/// Linear system too ill-conditioned to solve reliably.
class DegeneracyError : public NumericalError {
 public:
  DegeneracyError(const std::string& what, double condition_estimate)
      : NumericalError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// A trajectory left the finite range; carries the last valid time.
class IntegrationAborted : public NumericalError {
 public:
  IntegrationAborted(const std::string& what, double last_valid_time)
      : NumericalError(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// A single step of a propagator failed on the subinterval [t0, t1].
class TimeStepError : public NumericalError {
 public:
  TimeStepError(const std::string& what, double t0, double t1)
      : NumericalError(what), t0_(t0), t1_(t1) {}
  double t0() const { return t0_; }
  double t1() const { return t1_; }

 private:
  double t0_;
  double t1_;
};

/// Fixed-point iteration did not reach the tolerance.
class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> defects)
      : NumericalError(what), defects_(std::move(defects)) {}
  const std::vector<double>& defects() const { return defects_; }

 private:
  std::vector<double> defects_;
};

}  // namespace muskat
