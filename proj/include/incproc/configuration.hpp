#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "incproc/error.hpp"

namespace incproc {

/// Occupation vector eta with cached total particle number.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<std::int64_t> occupations) : eta_(std::move(occupations)) {
    for (auto v : eta_) {
      if (v < 0) throw DomainError("occupation numbers must be non-negative");
    }
    total_ = std::accumulate(eta_.begin(), eta_.end(), std::int64_t{0});
  }
  static Configuration empty(std::int64_t L) { return Configuration(std::vector<std::int64_t>(static_cast<std::size_t>(L), 0)); }

  std::int64_t sites() const { return static_cast<std::int64_t>(eta_.size()); }
  std::int64_t total() const { return total_; }
  const std::vector<std::int64_t>& occupations() const { return eta_; }
  std::int64_t operator[](std::size_t x) const { return eta_[x]; }

  /// Moves one particle from x to y (x may equal y).
  void move(std::size_t x, std::size_t y) {
    --eta_[x];
    ++eta_[y];
  }
  void add(std::size_t x) {
    ++eta_[x];
    ++total_;
  }

  bool conserved() const {
    return std::accumulate(eta_.begin(), eta_.end(), std::int64_t{0}) == total_;
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<std::int64_t> eta_;
  std::int64_t total_ = 0;
};

}  // namespace incproc
