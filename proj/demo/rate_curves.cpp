// Finite-size rate of the maximum occupation next to the limiting curves.
#include <cmath>
#include <cstdio>

#include "incproc/incproc.hpp"

using namespace incproc;

int main() {
  const std::int64_t L = 1024;
  const auto fluid = empirical_rate(ModelParams{L, L, 1.0}, Speed::L);
  const auto inter = empirical_rate(ModelParams{L, L, 1.0 / std::sqrt(double(L))}, Speed::dL);
  const auto full = empirical_rate(ModelParams{L, L, 1.0 / double(L * L)}, Speed::logL);

  std::printf("%6s | %9s %9s | %9s %9s | %9s %9s\n", "m", "fluid", "limit", "interm", "limit", "complete",
              "limit");
  for (double m : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    const auto M = static_cast<std::size_t>(std::llround(m * L));
    std::printf("%6.2f | %9.4f %9.4f | %9.4f %9.4f | %9.4f %9.4f\n", m, fluid.value[M],
                rate_fluid({1.0, m, 1.0}), inter.value[M], rate_intermediate(1.0, m), full.value[M],
                rate_complete(1.0, m, 2.0));
  }
}
