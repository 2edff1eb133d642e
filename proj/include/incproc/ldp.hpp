#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "incproc/error.hpp"
#include "incproc/log_math.hpp"
#include "incproc/model.hpp"
#include "incproc/partition_table.hpp"

namespace incproc {

// ---------------------------------------------------------------------------
// Closed-form rate functions of the maximum occupation.

struct RateQuery {
  double rho = 1.0;
  double m = 0.0;
  double d = 1.0;      ///< fluid regime only
  double gamma = 2.0;  ///< complete condensation, d = L^-gamma
};

/// Fixed d > 0, speed L:
///   (rho-m) log((rho-m)/(rho-m+d)) - rho log(rho/(rho+d)) - d log((rho-m+d)/(rho+d)).
inline double rate_fluid(const RateQuery& q) {
  if (!(q.m >= 0.0) || q.m >= q.rho) throw DomainError("rate_fluid needs 0 <= m < rho");
  if (!(q.d > 0.0)) throw DomainError("rate_fluid needs d > 0");
  const double r = q.rho - q.m;
  const double d = q.d;
  // log1p forms keep the d -> 0 limit accurate
  return -r * std::log1p(d / r) + q.rho * std::log1p(d / q.rho) - d * std::log((r + d) / (q.rho + d));
}

/// d -> 0, dL >> log L, speed dL: log(rho / (rho - m)).
inline double rate_intermediate(double rho, double m) {
  if (!(m >= 0.0) || m >= rho) throw DomainError("rate_intermediate needs 0 <= m < rho");
  return -std::log1p(-m / rho);
}

/// d = L^-gamma, speed log L: (ceil(rho/m) - 1) gamma - (ceil(rho/m) - 2).
/// At m = rho the formula gives 1; the boundary lies outside the regime in
/// which the limit holds.
inline double rate_complete(double rho, double m, double gamma) {
  if (!(m > 0.0)) throw DomainError("rate_complete needs m > 0");
  if (m > rho) throw DomainError("rate_complete needs m <= rho");
  if (!(gamma > 1.0)) throw DomainError("rate_complete needs gamma > 1");
  const double k = std::ceil(rho / m - 1e-12);
  return (k - 1.0) * gamma - (k - 2.0);
}

// ---------------------------------------------------------------------------
// Exact law of the maximum occupation.

struct MaxDistribution {
  std::int64_t L = 0;
  std::int64_t N = 0;
  double d = 0.0;
  std::vector<double> probs;     ///< P[eta_(1) = M], M = 0..N
  std::vector<double> log_probs;  ///< log of probs, accurate far into the tail
  std::vector<double> cdf;       ///< P[eta_(1) <= M] = Z^{(M)}_{L,N} / Z_{L,N}
  double log_Z = 0.0;            ///< log Z_{L,N} from the recursion
};

/// Exact P[eta_(1) = M] for all M from truncated partition functions.
///
/// With X^{(M)}_l = Z^{(M)}_l (all sites <= M) and Y^{(M)}_l (all sites <= M,
/// at least one site equal to M), rows along the doubling chain obey
///   Y_{a+b} = Y_a * X^{(M)}_b + X^{(M-1)}_a * Y_b,   X^{(M)} = X^{(M-1)} + Y^{(M)},
/// with * the convolution in the particle number.  Every term is positive, so
/// P[eta_(1) = M] = Y^{(M)}_{L,N} / Z_{L,N} keeps full relative precision even
/// where it is far below the CDF's resolution near 1.
inline MaxDistribution exact_max_distribution(const ModelParams& p,
                                              std::size_t budget_bytes = kDefaultTableBudget) {
  p.validate();
  MaxDistribution out;
  out.L = p.L;
  out.N = p.N;
  out.d = p.d;
  const auto N = p.N;
  const auto L = p.L;
  const auto width = static_cast<std::size_t>(N + 1);
  out.probs.assign(width, 0.0);
  out.log_probs.assign(width, kLogZero);
  out.cdf.assign(width, 0.0);
  if (N == 0) {
    out.probs[0] = 1.0;
    out.log_probs[0] = 0.0;
    out.cdf[0] = 1.0;
    return out;
  }

  const auto chain = doubling_chain(L);
  const std::size_t inner_rows = chain.size() - 1;  // the row for L is reduced to one entry
  const std::size_t need = 3 * std::max<std::size_t>(inner_rows, 1) * width * sizeof(double);
  if (need > budget_bytes) throw BudgetError(need, budget_bytes);

  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t i = 0; i < chain.size(); ++i) slot[chain[i]] = i;

  // X^{(0)}: only the empty configuration.
  std::vector<std::vector<double>> x_prev(chain.size(), std::vector<double>(width, kLogZero));
  for (auto& r : x_prev) r[0] = 0.0;
  std::vector<std::vector<double>> x_cur = x_prev;
  std::vector<std::vector<double>> y(chain.size(), std::vector<double>(width, kLogZero));
  std::vector<double> tmp1(width);
  std::vector<double> tmp2(width);

  auto dot_at_N = [N](std::span<const double> a, std::span<const double> b) {
    double mx = kLogZero;
    for (std::int64_t m = 0; m <= N; ++m) mx = std::max(mx, a[m] + b[N - m]);
    if (mx == kLogZero) return kLogZero;
    double s = 0.0;
    for (std::int64_t m = 0; m <= N; ++m) {
      const double t = a[m] + b[N - m];
      if (t != kLogZero) s += std::exp(t - mx);
    }
    return mx + std::log(s);
  };

  std::vector<double> log_y_top(width, kLogZero);
  std::vector<double> log_x_top(width, kLogZero);

  for (std::int64_t M = 1; M <= N; ++M) {
    const double lw = log_weight(M, p.d);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const auto l = chain[i];
      auto& yl = y[i];
      if (l == 1) {
        std::fill(yl.begin(), yl.end(), kLogZero);
        yl[static_cast<std::size_t>(M)] = lw;
      } else {
        const auto a = slot[l / 2];
        const auto b = slot[l - l / 2];
        if (l == L) {
          const double t1 = dot_at_N(y[a], x_cur[b]);
          const double t2 = dot_at_N(x_prev[a], y[b]);
          log_y_top[static_cast<std::size_t>(M)] = log_add(t1, t2);
          log_x_top[static_cast<std::size_t>(M)] =
              log_add(log_x_top[static_cast<std::size_t>(M - 1)], log_y_top[static_cast<std::size_t>(M)]);
          continue;
        }
        log_convolve(y[a], x_cur[b], tmp1);
        log_convolve(x_prev[a], y[b], tmp2);
        for (std::size_t n = 0; n < width; ++n) yl[n] = log_add(tmp1[n], tmp2[n]);
      }
      auto& xl = x_cur[i];
      for (std::size_t n = 0; n < width; ++n) xl[n] = log_add(x_prev[i][n], yl[n]);
      if (l == L) {  // L == 1
        log_y_top[static_cast<std::size_t>(M)] = yl[static_cast<std::size_t>(N)];
        log_x_top[static_cast<std::size_t>(M)] = xl[static_cast<std::size_t>(N)];
      }
    }
    std::swap(x_prev, x_cur);
  }

  out.log_Z = log_x_top[static_cast<std::size_t>(N)];
  for (std::size_t M = 1; M < width; ++M) {
    out.log_probs[M] = log_y_top[M] - out.log_Z;
    out.probs[M] = std::exp(out.log_probs[M]);
    out.cdf[M] = std::min(1.0, std::exp(log_x_top[M] - out.log_Z));
  }
  return out;
}

enum class Speed { L, dL, logL };

inline std::string_view to_string(Speed s) {
  switch (s) {
    case Speed::L: return "L";
    case Speed::dL: return "dL";
    case Speed::logL: return "logL";
  }
  return "?";
}

inline double speed_value(Speed s, std::int64_t L, double d) {
  const double l = static_cast<double>(L);
  switch (s) {
    case Speed::L: return l;
    case Speed::dL: return d * l;
    case Speed::logL: return std::log(l);
  }
  return 1.0;
}

struct RateCurve {
  Speed speed = Speed::L;
  double speed_value = 1.0;
  std::vector<double> m;      ///< M / L
  std::vector<double> value;  ///< -(1/speed) log P[eta_(1) = M]; +inf where P = 0
};

/// Finite-size rate estimate from an exact maximum distribution.
inline RateCurve empirical_rate(const MaxDistribution& dist, Speed speed) {
  RateCurve c;
  c.speed = speed;
  c.speed_value = speed_value(speed, dist.L, dist.d);
  const auto n = dist.log_probs.size();
  c.m.resize(n);
  c.value.resize(n);
  for (std::size_t M = 0; M < n; ++M) {
    c.m[M] = static_cast<double>(M) / static_cast<double>(dist.L);
    const double lp = dist.log_probs[M];
    c.value[M] = lp == kLogZero ? std::numeric_limits<double>::infinity() : -lp / c.speed_value;
  }
  return c;
}

inline RateCurve empirical_rate(const ModelParams& p, Speed speed) {
  return empirical_rate(exact_max_distribution(p), speed);
}

// ---------------------------------------------------------------------------
// Complete condensation: size-biased limits and the prefactor C(x).

/// rho^{-k} prod_{i=1..k} (1 - x_i)^{i-k-1}: limit of d^{-k} times the k-pick
/// size-biased joint law in stick-breaking coordinates x_i.
inline double condensed_joint_limit(std::span<const double> x, double rho) {
  if (!(rho > 0.0)) throw DomainError("density must be positive");
  const auto k = static_cast<double>(x.size());
  double v = std::pow(rho, -k);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && x[i] < 1.0)) throw DomainError("stick-breaking fractions must lie in (0, 1)");
    v *= std::pow(1.0 - x[i], static_cast<double>(i + 1) - k - 1.0);
  }
  return v;
}

/// Number of occupied sites needed for a maximum of mass fraction x: ceil(1/x).
inline int min_occupied_sites(double x) { return static_cast<int>(std::ceil(1.0 / x - 1e-12)); }

/// Sum over all k! pick orders of prod_{i<k} 1/(1 - s_i), s_i the mass taken
/// by the first i picks; `masses` are fractions summing to 1.
inline double prefactor_integrand(std::span<const double> masses) {
  const auto k = masses.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  do {
    double s = 0.0;
    double term = 1.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      s += masses[order[i]];
      term /= 1.0 - s;
    }
    total += term;
  } while (std::next_permutation(order.begin(), order.end()));
  return total;
}

/// C(x) in P[eta_(1) = xN] ~ C(x) d^{k-1} N^{k-2} / rho^{k-1}, k = ceil(1/x).
///
/// k = 2 uses the closed form 1/(x(1-x)).  For k = 3, 4 the permutation-summed
/// integrand is integrated over ordered masses x >= y_2 >= ... >= y_k, with
/// y_k fixed by the total, by nested adaptive Gauss-Kronrod.
inline double prefactor_C(double x, double rel_tol = 1e-8) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("prefactor_C needs x in (0, 1)");
  const int k = min_occupied_sites(x);
  if (k == 2) return 1.0 / (x * (1.0 - x));
  if (k > 4) throw DomainError("prefactor_C is only available for ceil(1/x) <= 4");

  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> masses(static_cast<std::size_t>(k));
  masses[0] = x;

  // integrates over y_j given the remaining mass r and the previous part's size
  std::function<double(int, double, double)> level = [&](int j, double r, double upper) -> double {
    if (j == k - 1) {
      masses[static_cast<std::size_t>(j)] = r;
      return prefactor_integrand(masses);
    }
    const double lo = r / static_cast<double>(k - j);
    const double hi = std::min(upper, r);
    if (!(hi > lo)) return 0.0;
    auto f = [&](double yj) {
      masses[static_cast<std::size_t>(j)] = yj;
      return level(j + 1, r - yj, yj);
    };
    return gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, rel_tol);
  };
  return level(1, 1.0 - x, x);
}

}  // namespace incproc
