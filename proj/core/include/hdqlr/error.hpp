#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hdqlr {

// Base of every error raised by the library. The CLI maps the category to an
// exit code: configuration (2), io (3), numerical (4).
class Error : public std::runtime_error {
 public:
  enum class Category { kConfig, kIo, kNumerical };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::kConfig, what) {}
};

// Missing column or malformed replication config.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Data that violates a Dataset invariant (non-binary d/z, constant column, ...).
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Non-numeric cell. Carries the 1-based data row and the column name.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : ConfigError(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class CapacityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::kIo, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(Category::kNumerical, what) {}
};

// |mean(-psi_a)| too small to divide by; the point estimator is undefined.
class WeakDenominatorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Omega(theta, theta) at or below the variance floor.
class DegenerateVarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Unpenalized fit on a rank-deficient design.
class SingularFitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Maximum likelihood logit does not exist (perfectly separated data at lambda = 0).
class SeparationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A nuisance solver hit its iteration cap.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hdqlr
