#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "incproc/error.hpp"

namespace incproc {

struct Summary {
  double mean = 0.0;
  double se = 0.0;  ///< standard error of the mean
  std::size_t count = 0;
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return s;
}

/// Lag-1 sample autocorrelation.
inline double lag1_autocorrelation(std::span<const double> xs) {
  if (xs.size() < 3) throw DomainError("autocorrelation needs at least 3 values");
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += (xs[i] - m) * (xs[i] - m);
    if (i + 1 < xs.size()) num += (xs[i] - m) * (xs[i + 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Weighted sample of reals.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution() = default;
  explicit EmpiricalDistribution(std::vector<double> samples, std::vector<double> weights = {})
      : samples_(std::move(samples)), weights_(std::move(weights)) {
    if (!weights_.empty() && weights_.size() != samples_.size()) {
      throw std::invalid_argument("weights must match samples");
    }
    sort();
  }

  void add(double x, double w = 1.0) {
    if (weights_.empty() && w != 1.0) weights_.assign(samples_.size(), 1.0);
    samples_.push_back(x);
    if (!weights_.empty()) weights_.push_back(w);
    sorted_ = false;
  }

  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }

  /// Distinct support points in increasing order with their normalized masses.
  struct Atoms {
    std::vector<double> x;
    std::vector<double> p;
  };
  Atoms atoms() const {
    require_nonempty();
    sort();
    Atoms a;
    double total = 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const double w = weight(i);
      total += w;
      if (!a.x.empty() && a.x.back() == samples_[i]) {
        a.p.back() += w;
      } else {
        a.x.push_back(samples_[i]);
        a.p.push_back(w);
      }
    }
    for (auto& p : a.p) p /= total;
    return a;
  }

  double mean() const {
    require_nonempty();
    double s = 0.0;
    double w = 0.0;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      s += weight(i) * samples_[i];
      w += weight(i);
    }
    return s / w;
  }

  /// P[X <= u]
  double cdf(double u) const {
    const auto a = atoms();
    double c = 0.0;
    for (std::size_t i = 0; i < a.x.size() && a.x[i] <= u; ++i) c += a.p[i];
    return std::min(c, 1.0);
  }

  /// P[X > u]
  double tail(double u) const { return 1.0 - cdf(u); }

 private:
  double weight(std::size_t i) const { return weights_.empty() ? 1.0 : weights_[i]; }
  void require_nonempty() const {
    if (samples_.empty()) throw DomainError("empirical distribution is empty");
  }
  void sort() const {
    if (sorted_) return;
    if (weights_.empty()) {
      std::sort(samples_.begin(), samples_.end());
    } else {
      std::vector<std::size_t> idx(samples_.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return samples_[a] < samples_[b]; });
      std::vector<double> s(samples_.size());
      std::vector<double> w(samples_.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        s[i] = samples_[idx[i]];
        w[i] = weights_[idx[i]];
      }
      samples_.swap(s);
      weights_.swap(w);
    }
    sorted_ = true;
  }

  mutable std::vector<double> samples_;
  mutable std::vector<double> weights_;
  mutable bool sorted_ = false;
};

/// sup_u |F_emp(u) - F(u)| for a continuous reference CDF.  Both one-sided
/// limits of the empirical step function are compared at every atom.
inline double ks_distance(const EmpiricalDistribution& emp, const std::function<double(double)>& cdf) {
  const auto a = emp.atoms();
  double below = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double f = cdf(a.x[i]);
    const double above = std::min(below + a.p[i], 1.0);
    worst = std::max({worst, std::abs(f - below), std::abs(f - above)});
    below = above;
  }
  return worst;
}

/// Sup distance between two distributions supported on the lattice
/// {spacing * n : n >= 0}; `ref_cdf(n)` is P_ref[X <= spacing * n].  Both CDFs
/// are step functions with jumps on the lattice, so comparing at lattice
/// points 0..n_max is the full sup norm provided n_max covers both supports.
inline double lattice_sup_distance(const EmpiricalDistribution& emp, const std::function<double(std::int64_t)>& ref_cdf,
                                   double spacing, std::int64_t n_max) {
  const auto a = emp.atoms();
  double worst = 0.0;
  double acc = 0.0;
  std::size_t j = 0;
  for (std::int64_t n = 0; n <= n_max; ++n) {
    const double u = spacing * static_cast<double>(n);
    while (j < a.x.size() && a.x[j] <= u + 1e-9 * spacing) acc += a.p[j++];
    worst = std::max(worst, std::abs(std::min(acc, 1.0) - ref_cdf(n)));
  }
  return worst;
}

}  // namespace incproc
