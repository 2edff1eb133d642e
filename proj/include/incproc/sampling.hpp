#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "incproc/configuration.hpp"
#include "incproc/error.hpp"
#include "incproc/model.hpp"
#include "incproc/rng.hpp"
#include "incproc/sum_tree.hpp"

namespace incproc {

/// A size-biased reordering of a configuration's occupation numbers.
struct SizeBiasedSample {
  std::vector<std::int64_t> values;
  std::int64_t source_N = 0;
};

/// Partition of (part of) the unit interval, in sampling or decreasing order.
struct UnitPartition {
  std::vector<double> parts;
  double residual = 0.0;  ///< mass not carried by `parts`
};

/// Sites drawn sequentially without replacement, each with probability
/// proportional to its occupation among the remaining sites.  Empty sites
/// follow in their original order.
inline SizeBiasedSample size_biased_permutation(const Configuration& c, Engine& rng) {
  if (c.total() < 1) throw DomainError("size-biased permutation needs N >= 1");
  std::vector<std::int64_t> occupied;
  for (auto v : c.occupations()) {
    if (v > 0) occupied.push_back(v);
  }
  SumTree<std::int64_t> tree{std::span<const std::int64_t>(occupied)};
  SizeBiasedSample out;
  out.source_N = c.total();
  out.values.reserve(static_cast<std::size_t>(c.sites()));
  std::int64_t remaining = c.total();
  while (remaining > 0) {
    const auto r = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(remaining)));
    const auto i = tree.find(r);
    const auto v = tree.weight(i);
    out.values.push_back(v);
    remaining -= v;
    tree.set(i, 0);
  }
  out.values.resize(static_cast<std::size_t>(c.sites()), 0);
  return out;
}

/// Occupations sorted non-increasingly.
inline std::vector<std::int64_t> order_statistics(std::span<const std::int64_t> eta) {
  std::vector<std::int64_t> out(eta.begin(), eta.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline std::vector<std::int64_t> order_statistics(const Configuration& c) { return order_statistics(c.occupations()); }

/// R_k = 1 - (1/N) sum_{i <= k} eta~_i, the mass left beyond the k-th pick.
inline double r_k(const SizeBiasedSample& s, std::size_t k) {
  if (k < 1 || k > s.values.size()) throw DomainError("r_k needs 1 <= k <= L");
  std::int64_t taken = 0;
  for (std::size_t i = 0; i < k; ++i) taken += s.values[i];
  const auto rest = s.source_N - taken;
  return static_cast<double>(rest) / static_cast<double>(s.source_N);
}

/// U ~ Beta(1, alpha) by inverse transform.
inline double beta_1_alpha(Engine& rng, double alpha) {
  const double r = uniform01(rng);
  return -std::expm1(std::log1p(-r) / alpha);
}

/// GEM(alpha) stick breaking: V_i = U_i prod_{j<i} (1 - U_j).
inline UnitPartition sample_gem(double alpha, std::size_t k_max, Engine& rng) {
  if (!(alpha > 0.0)) throw DomainError("GEM parameter must be positive");
  UnitPartition out;
  out.parts.reserve(k_max);
  double rest = 1.0;
  for (std::size_t i = 0; i < k_max; ++i) {
    const double u = beta_1_alpha(rng, alpha);
    out.parts.push_back(rest * u);
    rest *= 1.0 - u;
  }
  out.residual = rest;
  return out;
}

/// Number of sticks after which the expected residual (alpha/(1+alpha))^k
/// drops below tol.
inline std::size_t gem_cutoff(double alpha, double tol = 1e-6) {
  return static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(alpha / (1.0 + alpha))));
}

/// PD(alpha): a GEM sample sorted non-increasingly.  Breaks at least k_max
/// sticks and keeps going until the residual is at most tol.
inline UnitPartition sample_pd(double alpha, std::size_t k_max, Engine& rng, double tol = 1e-6) {
  auto g = sample_gem(alpha, k_max, rng);
  while (g.residual > tol) {
    const double u = beta_1_alpha(rng, alpha);
    g.parts.push_back(g.residual * u);
    g.residual *= 1.0 - u;
  }
  std::sort(g.parts.begin(), g.parts.end(), std::greater<>());
  return g;
}

/// Size-biased grand-canonical law n w(n) phi^n / (rho z(phi)), phi = rho/(d+rho).
inline double sized_biased_gc_pmf(std::int64_t n, double rho, double d) {
  if (!(rho > 0.0)) throw DomainError("density must be positive");
  if (n < 1) return 0.0;
  const GrandCanonical gc{fugacity_Phi(rho, d), d};
  return std::exp(std::log(static_cast<double>(n)) + log_weight(n, d) + static_cast<double>(n) * std::log(gc.phi) -
                  std::log(rho) - gc.log_normalization());
}

/// Number of occupied sites.
inline std::int64_t occupied_sites(const Configuration& c) {
  return std::count_if(c.occupations().begin(), c.occupations().end(), [](auto v) { return v > 0; });
}

struct PhaseDecomposition {
  double bulk_mass_fraction = 0.0;
  double condensed_mass_fraction = 0.0;
  double condensed_volume_fraction = 0.0;
};

/// Splits mass at the cutoff K: sites with eta_x <= K are bulk, above K condensed.
inline PhaseDecomposition phase_decomposition(const Configuration& c, std::int64_t K) {
  if (K < 0) throw DomainError("cutoff K must be >= 0");
  std::int64_t cond = 0;
  std::int64_t cond_sites = 0;
  for (auto v : c.occupations()) {
    if (v > K) {
      cond += v;
      ++cond_sites;
    }
  }
  PhaseDecomposition out;
  if (c.total() == 0) {
    out.bulk_mass_fraction = 1.0;
  } else {
    // integer split keeps bulk + condensed == 1 exactly
    out.condensed_mass_fraction = static_cast<double>(cond) / static_cast<double>(c.total());
    out.bulk_mass_fraction = 1.0 - out.condensed_mass_fraction;
  }
  out.condensed_volume_fraction = static_cast<double>(cond_sites) / static_cast<double>(c.sites());
  return out;
}

/// Average of eta_x^a over sites and configurations.
inline double empirical_moment(std::span<const Configuration> configs, double a) {
  if (!(a > 0.0)) throw DomainError("moment order must be positive");
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& c : configs) {
    for (auto v : c.occupations()) sum += v == 0 ? 0.0 : std::pow(static_cast<double>(v), a);
    count += c.sites();
  }
  if (count == 0) throw DomainError("no configurations");
  return sum / static_cast<double>(count);
}

/// eta_(1) / N.
inline double max_fraction(const Configuration& c) {
  if (c.total() == 0) throw DomainError("max fraction undefined for N = 0");
  const auto m = *std::max_element(c.occupations().begin(), c.occupations().end());
  return static_cast<double>(m) / static_cast<double>(c.total());
}

}  // namespace incproc
