#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "incproc/error.hpp"
#include "incproc/log_math.hpp"

namespace incproc {

enum class Family { inclusion, zero_range };

inline std::string_view to_string(Family f) {
  return f == Family::inclusion ? "inclusion" : "zero-range";
}

/// System size, particle number and diffusion parameter d.
struct ModelParams {
  std::int64_t L = 1;
  std::int64_t N = 0;
  double d = 1.0;
  Family family = Family::inclusion;

  double density() const { return static_cast<double>(N) / static_cast<double>(L); }

  void validate() const {
    if (L < 1) throw DomainError("L must be >= 1");
    if (N < 0) throw DomainError("N must be >= 0");
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("d must be a positive finite number");
  }
};

/// log w(n) = log Gamma(n+d) - log Gamma(n+1) - log Gamma(d).
inline double log_weight(std::int64_t n, double d) {
  if (n < 0) return kLogZero;
  if (n == 0) return 0.0;
  const double x = static_cast<double>(n);
  return std::lgamma(x + d) - std::lgamma(x + 1.0) - std::lgamma(d);
}

/// Closed-form log Z_{L,N} = log Gamma(N+dL) - log Gamma(N+1) - log Gamma(dL).
inline double log_Z_closed(std::int64_t L, std::int64_t N, double d) {
  if (N < 0) return kLogZero;
  if (L == 0) return N == 0 ? 0.0 : kLogZero;
  if (N == 0) return 0.0;
  const double dl = d * static_cast<double>(L);
  const double n = static_cast<double>(N);
  return std::lgamma(n + dl) - std::lgamma(n + 1.0) - std::lgamma(dl);
}

inline double log_Z_closed(const ModelParams& p) { return log_Z_closed(p.L, p.N, p.d); }

/// Grand-canonical product measure with fugacity phi in [0, 1).
struct GrandCanonical {
  double phi = 0.0;
  double d = 1.0;

  /// log z(phi) = -d log(1 - phi)
  double log_normalization() const { return -d * std::log1p(-phi); }
};

/// R(phi) = d phi / (1 - phi), the mean occupation at fugacity phi.
inline double density_R(double phi, double d) {
  if (!(phi >= 0.0) || phi >= 1.0) throw DomainError("fugacity must lie in [0, 1)");
  return d * phi / (1.0 - phi);
}

/// Phi(rho) = rho / (d + rho), the inverse of density_R.
inline double fugacity_Phi(double rho, double d) {
  if (!(rho >= 0.0)) throw DomainError("density must be >= 0");
  return rho / (d + rho);
}

/// w(n) phi^n / z(phi).
inline double grand_canonical_pmf(std::int64_t n, const GrandCanonical& gc) {
  if (!(gc.phi >= 0.0) || gc.phi >= 1.0) throw DomainError("fugacity must lie in [0, 1)");
  if (n < 0) return 0.0;
  if (gc.phi == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(log_weight(n, gc.d) + static_cast<double>(n) * std::log(gc.phi) -
                  gc.log_normalization());
}

/// Specific relative entropy (1/L) H(pi_{L,N} | nu_phi^L)
///   = log z(phi) - (N/L) log phi - (1/L) log Z_{L,N}.
inline double relative_entropy_rate(const ModelParams& p, double phi) {
  if (!(phi > 0.0) || phi >= 1.0) throw DomainError("fugacity must lie in (0, 1)");
  const GrandCanonical gc{phi, p.d};
  const double l = static_cast<double>(p.L);
  return gc.log_normalization() - p.density() * std::log(phi) - log_Z_closed(p) / l;
}

enum class ZRegime {
  dL_to_alpha,     ///< dL bounded: Z ~ N^{dL-1} / Gamma(dL)
  dL_to_infinity,  ///< d -> 0, dL -> infinity: Stirling form
};

/// Leading-order asymptotics of log Z_{L,N}; for validation against log_Z_closed.
inline double log_Z_asymptotic(const ModelParams& p, ZRegime regime) {
  const double n = static_cast<double>(p.N);
  const double dl = p.d * static_cast<double>(p.L);
  if (p.N == 0) return 0.0;
  switch (regime) {
    case ZRegime::dL_to_alpha:
      // covers dL -> 0 as well, where 1/Gamma(dL) ~ dL gives d N^{dL} / rho
      return (dl - 1.0) * std::log(n) - std::lgamma(dl);
    case ZRegime::dL_to_infinity:
      return -1.0 - 0.5 * std::log(2.0 * std::numbers::pi * dl) + (dl - 1.0) * std::log(n / dl) +
             (n + dl) * std::log1p(dl / n);
  }
  return kLogZero;
}

/// Asymptotic log of Z_{L-1,N-n} / Z_{L,N} for fixed n when dL -> infinity.
inline double log_Z_ratio_intermediate(const ModelParams& p, std::int64_t n) {
  const double nn = static_cast<double>(n);
  const double bigN = static_cast<double>(p.N);
  const double l = static_cast<double>(p.L);
  const double dl = p.d * l;
  return dl * std::log1p(-nn / bigN) + dl * std::log1p(1.0 / l) - nn * std::log1p(dl / bigN);
}

}  // namespace incproc
