#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace incproc {

/// log(0); used for impossible masses (Z_{l,n} = 0).
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs) m = std::max(m, x);
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

namespace detail {

struct Support {
  std::ptrdiff_t lo = -1;
  std::ptrdiff_t hi = -1;
  bool empty() const { return lo < 0; }
};

inline Support finite_support(std::span<const double> v) {
  Support s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != kLogZero) {
      if (s.lo < 0) s.lo = static_cast<std::ptrdiff_t>(i);
      s.hi = static_cast<std::ptrdiff_t>(i);
    }
  }
  return s;
}

// Entries whose rescaled linear sum falls below this are recomputed exactly.
inline constexpr double kUnderflowGuard = 1e-250;

inline double log_conv_entry_exact(std::span<const double> a, std::span<const double> b,
                                   std::ptrdiff_t n, Support sa, Support sb) {
  const std::ptrdiff_t m_lo = std::max(sa.lo, n - sb.hi);
  const std::ptrdiff_t m_hi = std::min(sa.hi, n - sb.lo);
  double mx = kLogZero;
  for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m) mx = std::max(mx, a[m] + b[n - m]);
  if (mx == kLogZero) return kLogZero;
  double s = 0.0;
  for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m) {
    const double t = a[m] + b[n - m];
    if (t != kLogZero) s += std::exp(t - mx);
  }
  return mx + std::log(s);
}

}  // namespace detail

/// Log-space convolution: out[n] = log sum_m exp(a[m] + b[n-m]) for n < out.size().
///
/// Both inputs are exponentially tilted by a common slope before being moved to
/// linear space, so a plain multiply-add convolution can be used; the tilt is
/// chosen so that the two ends of the output support sit at equal height.
/// Entries whose linear value lands too close to the underflow threshold are
/// recomputed with an exact per-entry log-sum-exp.
inline void log_convolve(std::span<const double> a, std::span<const double> b,
                         std::span<double> out) {
  std::fill(out.begin(), out.end(), kLogZero);
  const auto sa = detail::finite_support(a);
  const auto sb = detail::finite_support(b);
  if (sa.empty() || sb.empty() || out.empty()) return;

  const std::ptrdiff_t n_lo = sa.lo + sb.lo;
  const std::ptrdiff_t n_hi =
      std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out.size()) - 1, sa.hi + sb.hi);
  if (n_lo > n_hi) return;

  double theta = 0.0;
  if (n_hi > n_lo) {
    double c_hi = kLogZero;
    const std::ptrdiff_t m_lo = std::max(sa.lo, n_hi - sb.hi);
    const std::ptrdiff_t m_hi = std::min(sa.hi, n_hi - sb.lo);
    for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m) c_hi = std::max(c_hi, a[m] + b[n_hi - m]);
    const double c_lo = a[sa.lo] + b[sb.lo];
    if (c_hi != kLogZero) theta = (c_hi - c_lo) / static_cast<double>(n_hi - n_lo);
  }

  auto to_linear = [theta](std::span<const double> v, detail::Support s, std::vector<double>& lin) {
    double mx = kLogZero;
    for (std::ptrdiff_t i = s.lo; i <= s.hi; ++i) mx = std::max(mx, v[i] - theta * double(i));
    lin.assign(static_cast<std::size_t>(s.hi - s.lo + 1), 0.0);
    for (std::ptrdiff_t i = s.lo; i <= s.hi; ++i) {
      if (v[i] != kLogZero) lin[i - s.lo] = std::exp(v[i] - theta * double(i) - mx);
    }
    return mx;
  };

  std::vector<double> ea;
  std::vector<double> eb;
  const double a_off = to_linear(a, sa, ea);
  const double b_off = to_linear(b, sb, eb);

  std::vector<double> acc(static_cast<std::size_t>(n_hi - n_lo + 1), 0.0);
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(eb.size());
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ea.size()); ++i) {
    const double ai = ea[i];
    if (ai == 0.0) continue;
    // output index (sa.lo + i) + (sb.lo + j) - n_lo = i + j
    const std::ptrdiff_t j_end = std::min(nb, n_hi - n_lo - i + 1);
    double* dst = acc.data() + i;
    const double* src = eb.data();
    for (std::ptrdiff_t j = 0; j < j_end; ++j) dst[j] += ai * src[j];
  }

  for (std::ptrdiff_t n = n_lo; n <= n_hi; ++n) {
    const double s = acc[n - n_lo];
    if (s > detail::kUnderflowGuard) {
      out[n] = std::log(s) + theta * double(n) + a_off + b_off;
    } else {
      out[n] = detail::log_conv_entry_exact(a, b, n, sa, sb);
    }
  }
}

}  // namespace incproc
