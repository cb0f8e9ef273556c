#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rpinn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument shape or value (length mismatch, derivative order out of range, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An output file or directory could not be written.
class OutputError : public Error {
 public:
  using Error::Error;
};

/// Evaluation point outside the problem domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (quadrature grids, training settings, config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A function evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t component)
      : Error(what), component_(component) {}

  [[nodiscard]] std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

/// Non-finite loss during optimization.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::size_t epoch) : Error(what), epoch_(epoch) {}

  [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Implicit step failure in the BDF oracle (Newton did not converge or the state blew up).
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, double time) : Error(what), time_(time) {}

  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace rpinn
