#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace incproc {

/// Complete binary tree of partial sums over non-negative leaf weights.
///
/// Updates recompute each ancestor as left + right, so sums carry no drift
/// however many updates are applied.  `find` descends with a target in
/// [0, total) and returns the leaf whose cumulative interval contains it.
template <class T>
class SumTree {
 public:
  SumTree() = default;
  explicit SumTree(std::size_t n) { reset(n); }
  explicit SumTree(std::span<const T> weights) { assign(weights); }

  void reset(std::size_t n) {
    n_ = n;
    cap_ = 1;
    while (cap_ < n_) cap_ <<= 1;
    nodes_.assign(2 * cap_, T{});
  }

  void assign(std::span<const T> weights) {
    reset(weights.size());
    for (std::size_t i = 0; i < n_; ++i) nodes_[cap_ + i] = weights[i];
    for (std::size_t i = cap_ - 1; i >= 1; --i) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
  }

  std::size_t size() const { return n_; }
  T total() const { return nodes_.empty() ? T{} : nodes_[1]; }
  T weight(std::size_t i) const { return nodes_[cap_ + i]; }

  void set(std::size_t i, T w) {
    assert(i < n_);
    std::size_t k = cap_ + i;
    nodes_[k] = w;
    for (k >>= 1; k >= 1; k >>= 1) nodes_[k] = nodes_[2 * k] + nodes_[2 * k + 1];
  }

  /// Leaf index i with prefix(i) <= target < prefix(i) + weight(i).
  std::size_t find(T target) const {
    std::size_t k = 1;
    while (k < cap_) {
      const T left = nodes_[2 * k];
      if (target < left) {
        k = 2 * k;
      } else {
        target -= left;
        k = 2 * k + 1;
      }
    }
    std::size_t i = k - cap_;
    // Floating-point round-off can land on a zero-weight padding leaf.
    while (i > 0 && (i >= n_ || nodes_[cap_ + i] <= T{})) --i;
    return i;
  }

 private:
  std::size_t n_ = 0;
  std::size_t cap_ = 1;
  std::vector<T> nodes_;
};

}  // namespace incproc
