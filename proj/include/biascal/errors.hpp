#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace biascal {

/// Argument outside the mathematical domain of an operation (e.g. delta <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid estimator or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The bias-variance balancing problem has an empty feasible region.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::int64_t n, double K, const std::string& why);

  std::int64_t n() const noexcept { return n_; }
  double K() const noexcept { return K_; }

 private:
  std::int64_t n_;
  double K_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace biascal
