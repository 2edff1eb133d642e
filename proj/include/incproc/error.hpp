#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace incproc {

/// Argument outside the mathematical domain of an operation (e.g. phi >= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A table or buffer would exceed the configured memory budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(std::size_t required, std::size_t budget)
      : std::runtime_error("memory budget exceeded: need " + std::to_string(required) +
                           " bytes, budget is " + std::to_string(budget) + " bytes"),
        required_bytes(required),
        budget_bytes(budget) {}

  std::size_t required_bytes;
  std::size_t budget_bytes;
};

/// Invalid experiment configuration (unknown key, bad value, conflicting flags).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace incproc
