// Stationary snapshots of the inclusion process as d shrinks at fixed density.
#include <cstdio>

#include "incproc/incproc.hpp"

using namespace incproc;

int main() {
  const std::int64_t L = 128, N = 256;
  std::printf("%10s %14s %16s %10s\n", "dL", "max fraction", "occupied sites", "R_1");
  for (double dl : {64.0, 8.0, 1.0, 0.125}) {
    const ModelParams p{L, N, dl / static_cast<double>(L)};
    const auto samples = sample_replicas(p, DynamicsKind::CG, 8, 4, 2024, std::nullopt, 10.0);
    double mf = 0.0, occ = 0.0, r1 = 0.0;
    for (const auto& s : samples) {
      auto rng = make_engine(s.seed + s.index);
      mf += max_fraction(s.config);
      occ += static_cast<double>(occupied_sites(s.config));
      r1 += r_k(size_biased_permutation(s.config, rng), 1);
    }
    const auto n = static_cast<double>(samples.size());
    std::printf("%10.3f %14.4f %16.2f %10.4f\n", dl, mf / n, occ / n, r1 / n);
  }
}
