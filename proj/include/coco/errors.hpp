#pragma once

#include <stdexcept>
#include <string>

namespace coco {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation point outside the region where a map or series is valid.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Conformal map with vanishing derivative or a self-intersecting boundary.
class DegenerateMapError : public Error {
public:
  using Error::Error;
};

/// Faber/Grunsky construction failed its oracle or truncation checks.
class ConstructionError : public Error {
public:
  using Error::Error;
};

/// Singular or ill-posed matrix system.
class AssemblyError : public Error {
public:
  using Error::Error;
  AssemblyError(const std::string &what, double cond)
      : Error(what + " (condition estimate " + std::to_string(cond) + ")"),
        condition(cond) {}
  double condition = 0.0;
};

/// Non-finite values or divergence during optimization/training.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Invalid user configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace coco
