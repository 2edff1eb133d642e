#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <vector>
#include <ostream>
#include <string>

#include <json.hpp>

#include "incproc/configuration.hpp"
#include "incproc/dynamics.hpp"
#include "incproc/model.hpp"

namespace incproc {

inline constexpr const char* kVersion = "0.3.0";

/// Shortest round-trip representation of a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer the short form when it round-trips
  for (int prec = 6; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

/// CSV header for configuration rows with L sites.
inline std::string configuration_csv_header(std::int64_t L) {
  std::string h = "L,N,d,kind,seed";
  for (std::int64_t x = 1; x <= L; ++x) h += ",eta_" + std::to_string(x);
  return h;
}

/// One CSV row: L, N, d, kind, seed, eta_1..eta_L.
inline void write_configuration_csv(std::ostream& os, const Configuration& c, double d, DynamicsKind kind,
                                    std::uint64_t seed) {
  os << c.sites() << ',' << c.total() << ',' << format_double(d) << ',' << to_string(kind) << ',' << seed;
  for (auto v : c.occupations()) os << ',' << v;
  os << '\n';
}

inline nlohmann::ordered_json configuration_json(const Configuration& c, double d, DynamicsKind kind,
                                                 std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["L"] = c.sites();
  j["N"] = c.total();
  j["d"] = d;
  j["kind"] = std::string(to_string(kind));
  j["seed"] = seed;
  j["eta"] = std::vector<std::int64_t>(c.occupations().begin(), c.occupations().end());
  return j;
}

inline Configuration configuration_from_json(const nlohmann::json& j) {
  auto eta = j.at("eta").get<std::vector<std::int64_t>>();
  Configuration c(std::move(eta));
  if (c.sites() != j.at("L").get<std::int64_t>() || c.total() != j.at("N").get<std::int64_t>()) {
    throw std::invalid_argument("configuration record is inconsistent");
  }
  return c;
}

}  // namespace incproc
