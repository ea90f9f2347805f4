#pragma once

#include <stdexcept>
#include <string>

namespace dpd {

/// Raised when an input lies outside the domain of a formula (alpha = 0 where
/// alpha > 0 is required, mixed support types, contamination fraction > 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a parameter vector violates positivity or dimension constraints.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot reach its tolerance.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem tied to a dotted key path such as `model.design.path`.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : std::runtime_error(key_path + ": " + what), key_path_(std::move(key_path)) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace dpd
