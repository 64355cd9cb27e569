#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grandparis {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation called on an object that does not satisfy its precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A model or run configuration is incomplete or inconsistent.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every importance weight of a freshly built cloud vanished.
class WeightDegeneracyError : public std::runtime_error {
 public:
  WeightDegeneracyError(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A density estimate exceeded the accept-reject dominating constant.
class BoundViolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backward index sampling exhausted its trial budget.
class StallError : public std::runtime_error {
 public:
  StallError(std::size_t step, std::size_t particle, const std::string& what)
      : std::runtime_error(what), step_(step), particle_(particle) {}
  std::size_t step() const noexcept { return step_; }
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t step_;
  std::size_t particle_;
};

/// The requested sigma-plus bound does not exist for this model.
class StrategyUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// arb / acv cannot be computed from the given sample.
class MetricUndefinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace grandparis
