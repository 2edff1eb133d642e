#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "incproc/error.hpp"
#include "incproc/log_math.hpp"
#include "incproc/model.hpp"

namespace incproc {

inline constexpr std::size_t kDefaultTableBudget = std::size_t{1} << 30;  // 1 GiB

enum class TableMode {
  full,   ///< every row l = 1..maxL
  chain,  ///< only the rows the doubling recursion visits on its way to maxL
};

/// Log-space canonical partition functions log Z_{l,n}, optionally truncated
/// at a maximal single-site occupation M.  Immutable once built.
class PartitionTable {
 public:
  double d() const { return d_; }
  std::int64_t max_L() const { return max_L_; }
  std::int64_t max_N() const { return max_N_; }
  std::optional<std::int64_t> truncation() const { return truncation_; }
  TableMode mode() const { return mode_; }

  bool has_row(std::int64_t l) const {
    if (l == 0) return true;
    return l >= 1 && l <= max_L_ && !rows_[static_cast<std::size_t>(l - 1)].empty();
  }

  /// log Z_{l,n}; l = 0 is the empty system (Z_{0,0} = 1), n < 0 gives -inf.
  double log_z(std::int64_t l, std::int64_t n) const {
    if (n < 0) return kLogZero;
    if (l == 0) return n == 0 ? 0.0 : kLogZero;
    if (!has_row(l)) throw std::out_of_range("partition table row " + std::to_string(l) + " not available");
    if (n > max_N_) throw std::out_of_range("partition table column " + std::to_string(n) + " out of range");
    return rows_[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(n)];
  }

  std::span<const double> row(std::int64_t l) const {
    if (l < 1 || !has_row(l)) throw std::out_of_range("partition table row not available");
    return rows_[static_cast<std::size_t>(l - 1)];
  }

  /// Bytes needed to hold a full table of the given shape.
  static std::size_t required_bytes(std::int64_t max_L, std::int64_t max_N) {
    return static_cast<std::size_t>(max_L) * static_cast<std::size_t>(max_N + 1) * sizeof(double);
  }

  friend PartitionTable build_partition_table(double, std::int64_t, std::int64_t,
                                              std::optional<std::int64_t>, TableMode, std::size_t);
  friend PartitionTable read_table_binary(std::istream&);

 private:
  double d_ = 1.0;
  std::int64_t max_L_ = 0;
  std::int64_t max_N_ = 0;
  std::optional<std::int64_t> truncation_;
  TableMode mode_ = TableMode::full;
  std::vector<std::vector<double>> rows_;
};

/// First row: log w(n), or -inf above the truncation level.
inline std::vector<double> base_row(double d, std::int64_t max_N, std::optional<std::int64_t> truncation) {
  std::vector<double> r(static_cast<std::size_t>(max_N + 1));
  for (std::int64_t n = 0; n <= max_N; ++n) {
    r[static_cast<std::size_t>(n)] = (truncation && n > *truncation) ? kLogZero : log_weight(n, d);
  }
  return r;
}

/// Row lengths visited by the doubling split l -> (floor(l/2), l - floor(l/2)).
inline std::vector<std::int64_t> doubling_chain(std::int64_t target) {
  std::map<std::int64_t, bool> seen;
  std::vector<std::int64_t> stack{target};
  while (!stack.empty()) {
    const auto l = stack.back();
    stack.pop_back();
    if (l < 1 || seen.count(l)) continue;
    seen[l] = true;
    if (l > 1) {
      stack.push_back(l / 2);
      stack.push_back(l - l / 2);
    }
  }
  std::vector<std::int64_t> out;
  for (const auto& [l, _] : seen) out.push_back(l);
  return out;  // ascending, so each row's halves come first
}

/// Fills log Z_{l,n} by Z_{l,n} = sum_m Z_{k,m} Z_{l-k,n-m}, k = floor(l/2).
inline PartitionTable build_partition_table(double d, std::int64_t max_L, std::int64_t max_N,
                                            std::optional<std::int64_t> truncation = std::nullopt,
                                            TableMode mode = TableMode::full,
                                            std::size_t budget_bytes = kDefaultTableBudget) {
  if (!(d > 0.0)) throw DomainError("d must be positive");
  if (max_L < 1) throw DomainError("maxL must be >= 1");
  if (max_N < 0) throw DomainError("maxN must be >= 0");
  if (truncation && *truncation < 0) throw DomainError("truncation must be >= 0");

  std::vector<std::int64_t> rows_needed;
  if (mode == TableMode::full) {
    for (std::int64_t l = 1; l <= max_L; ++l) rows_needed.push_back(l);
  } else {
    rows_needed = doubling_chain(max_L);
  }
  const std::size_t need =
      rows_needed.size() * static_cast<std::size_t>(max_N + 1) * sizeof(double);
  if (need > budget_bytes) throw BudgetError(need, budget_bytes);

  PartitionTable t;
  t.d_ = d;
  t.max_L_ = max_L;
  t.max_N_ = max_N;
  t.truncation_ = truncation;
  t.mode_ = mode;
  t.rows_.resize(static_cast<std::size_t>(max_L));

  for (const auto l : rows_needed) {
    auto& row = t.rows_[static_cast<std::size_t>(l - 1)];
    if (l == 1) {
      row = base_row(d, max_N, truncation);
      continue;
    }
    const auto k = l / 2;
    row.assign(static_cast<std::size_t>(max_N + 1), kLogZero);
    log_convolve(t.rows_[static_cast<std::size_t>(k - 1)], t.rows_[static_cast<std::size_t>(l - k - 1)], row);
    row[0] = 0.0;  // Z_{l,0} = 1 exactly
  }
  return t;
}

inline PartitionTable build_partition_table(const ModelParams& p,
                                            std::optional<std::int64_t> truncation = std::nullopt,
                                            TableMode mode = TableMode::full,
                                            std::size_t budget_bytes = kDefaultTableBudget) {
  return build_partition_table(p.d, p.L, p.N, truncation, mode, budget_bytes);
}

// ---------------------------------------------------------------------------
// Serialization.  Binary layout, all little-endian:
//   f64 d | u64 maxL | u64 maxN | u64 truncation (0 = none) | maxL*(maxN+1) f64 row-major
// Impossible masses are stored as -inf.

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

template <class T>
T read_le(std::istream& is) {
  static_assert(sizeof(T) == 8);
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("truncated partition table stream");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace detail

inline void write_table_binary(const PartitionTable& t, std::ostream& os) {
  if (t.mode() != TableMode::full) throw std::invalid_argument("only full tables can be serialized");
  if (t.truncation() && *t.truncation() == 0) {
    throw std::invalid_argument("truncation 0 is not representable in the binary header");
  }
  detail::write_le(os, t.d());
  detail::write_le(os, static_cast<std::uint64_t>(t.max_L()));
  detail::write_le(os, static_cast<std::uint64_t>(t.max_N()));
  detail::write_le(os, static_cast<std::uint64_t>(t.truncation().value_or(0)));
  for (std::int64_t l = 1; l <= t.max_L(); ++l) {
    for (double v : t.row(l)) detail::write_le(os, v);
  }
}

inline PartitionTable read_table_binary(std::istream& is) {
  PartitionTable t;
  t.d_ = detail::read_le<double>(is);
  t.max_L_ = static_cast<std::int64_t>(detail::read_le<std::uint64_t>(is));
  t.max_N_ = static_cast<std::int64_t>(detail::read_le<std::uint64_t>(is));
  const auto trunc = detail::read_le<std::uint64_t>(is);
  if (trunc != 0) t.truncation_ = static_cast<std::int64_t>(trunc);
  if (t.max_L_ < 1 || t.max_N_ < 0) throw std::runtime_error("corrupt partition table header");
  t.mode_ = TableMode::full;
  t.rows_.assign(static_cast<std::size_t>(t.max_L_), std::vector<double>(static_cast<std::size_t>(t.max_N_ + 1)));
  for (auto& row : t.rows_) {
    for (auto& v : row) v = detail::read_le<double>(is);
  }
  return t;
}

/// CSV dump: "l,n,logZ", one row per entry; -inf is written as "-inf".
inline void write_table_csv(const PartitionTable& t, std::ostream& os) {
  os << "l,n,logZ\n";
  char buf[64];
  for (std::int64_t l = 1; l <= t.max_L(); ++l) {
    if (!t.has_row(l)) continue;
    const auto r = t.row(l);
    for (std::int64_t n = 0; n <= t.max_N(); ++n) {
      const double v = r[static_cast<std::size_t>(n)];
      if (v == kLogZero) {
        os << l << ',' << n << ",-inf\n";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << l << ',' << n << ',' << buf << '\n';
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Canonical and size-biased marginals.

namespace detail {
inline void require_fits(const ModelParams& p, const PartitionTable& t) {
  if (p.L > t.max_L() || p.N > t.max_N()) throw std::out_of_range("partition table too small for parameters");
  if (t.truncation()) throw std::invalid_argument("marginals need an untruncated partition table");
}
}  // namespace detail

/// pi_{L,N}[eta_1 = n] = w(n) Z_{L-1,N-n} / Z_{L,N}.
inline double canonical_marginal_pmf(std::int64_t n, const ModelParams& p, const PartitionTable& t) {
  detail::require_fits(p, t);
  if (n < 0 || n > p.N) return 0.0;
  const double lz = log_weight(n, p.d) + t.log_z(p.L - 1, p.N - n) - t.log_z(p.L, p.N);
  return std::exp(lz);
}

/// pi_{L,N}[size-biased first pick = n] = (L/N) n w(n) Z_{L-1,N-n} / Z_{L,N}.
inline double size_biased_marginal_pmf(std::int64_t n, const ModelParams& p, const PartitionTable& t) {
  if (p.N < 1) throw DomainError("size-biased marginal undefined for N = 0");
  detail::require_fits(p, t);
  if (n < 1 || n > p.N) return 0.0;
  const double lz = std::log(double(p.L)) - std::log(double(p.N)) + std::log(double(n)) +
                    log_weight(n, p.d) + t.log_z(p.L - 1, p.N - n) - t.log_z(p.L, p.N);
  return std::exp(lz);
}

/// Joint law of the first k size-biased picks:
///   L(L-1)..(L-k+1) / [N (N-n_1) .. (N - n_1 - .. - n_{k-1})]
///   * prod_i n_i w(n_i) * Z_{L-k, N - sum n} / Z_{L,N}.
inline double size_biased_joint_pmf(std::span<const std::int64_t> n, const ModelParams& p,
                                    const PartitionTable& t) {
  detail::require_fits(p, t);
  const auto k = static_cast<std::int64_t>(n.size());
  if (k == 0) return 1.0;
  if (k > p.L) throw DomainError("more picks than sites");
  double lz = 0.0;
  std::int64_t remaining = p.N;
  for (std::int64_t i = 0; i < k; ++i) {
    const auto ni = n[static_cast<std::size_t>(i)];
    if (ni < 1 || ni > remaining) return 0.0;
    lz += std::log(double(p.L - i)) - std::log(double(remaining)) + std::log(double(ni)) + log_weight(ni, p.d);
    remaining -= ni;
  }
  lz += t.log_z(p.L - k, remaining) - t.log_z(p.L, p.N);
  return std::exp(lz);
}

}  // namespace incproc
