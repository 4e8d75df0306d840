#pragma once

#include <stdexcept>
#include <string>

namespace icubench {

/// Invalid configuration value, flag or configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input table does not have the columns or layout we need.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is unreadable or inconsistent (I/O failure, broken cache, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter shapes do not line up.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A metric is not defined for the given inputs (single-class labels, zero variance, ...).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Optimisation diverged or produced a non-finite gradient.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace icubench
