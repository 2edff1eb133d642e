// Size-biased frequencies of a stationary configuration against GEM(dL).
#include <cmath>
#include <cstdio>
#include <vector>

#include "incproc/incproc.hpp"

using namespace incproc;

int main() {
  const ModelParams p{256, 512, 2.0 / 256.0};
  const double alpha = p.d * static_cast<double>(p.L);
  const std::size_t K = 5;
  const auto samples = sample_replicas(p, DynamicsKind::CG, 40, 1, 7);

  std::vector<double> sim(K, 0.0), gem(K, 0.0);
  auto rng = make_engine(99);
  for (const auto& s : samples) {
    for (int r = 0; r < 5; ++r) {
      const auto sb = size_biased_permutation(s.config, rng);
      for (std::size_t k = 0; k < K; ++k) sim[k] += r_k(sb, k + 1) / (5.0 * samples.size());
    }
  }
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto g = sample_gem(alpha, K, rng);
    double rest = 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      rest -= g.parts[k];
      gem[k] += rest / draws;
    }
  }
  std::printf("%3s %12s %12s %12s\n", "k", "simulated", "GEM", "exact");
  for (std::size_t k = 0; k < K; ++k) {
    std::printf("%3zu %12.4f %12.4f %12.4f\n", k + 1, sim[k], gem[k],
                std::pow(alpha / (1.0 + alpha), static_cast<double>(k + 1)));
  }
}
