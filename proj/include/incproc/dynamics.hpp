#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "incproc/configuration.hpp"
#include "incproc/error.hpp"
#include "incproc/model.hpp"
#include "incproc/rng.hpp"
#include "incproc/sum_tree.hpp"

namespace incproc {

enum class DynamicsKind {
  CG,        ///< complete graph, rejection algorithm with a fixed time step
  TA_ring,   ///< totally asymmetric inclusion process on a ring, Gillespie
  ZRP_ring,  ///< totally asymmetric zero-range process on a ring, Gillespie
};

inline std::string_view to_string(DynamicsKind k) {
  switch (k) {
    case DynamicsKind::CG: return "cg";
    case DynamicsKind::TA_ring: return "ta";
    case DynamicsKind::ZRP_ring: return "zrp";
  }
  return "?";
}

inline DynamicsKind parse_kind(std::string_view s) {
  if (s == "cg") return DynamicsKind::CG;
  if (s == "ta") return DynamicsKind::TA_ring;
  if (s == "zrp") return DynamicsKind::ZRP_ring;
  throw ConfigError("unknown dynamics kind '" + std::string(s) + "' (expected cg, ta or zrp)");
}

/// Inclusion rate for a jump out of site x onto its right neighbour.
inline double ta_rate(std::int64_t eta_x, std::int64_t eta_next, double d) {
  return static_cast<double>(eta_x) * (d + static_cast<double>(eta_next));
}

/// Zero-range departure rate u(n) = n / (d + n - 1), u(0) = 0.
inline double zrp_rate(std::int64_t n, double d) {
  if (n <= 0) return 0.0;
  const double x = static_cast<double>(n);
  return x / (d + x - 1.0);
}

struct SimState {
  ModelParams params;
  DynamicsKind kind = DynamicsKind::CG;
  Configuration config;
  double time = 0.0;
  std::uint64_t seed = 0;
  Engine rng;
  std::uint64_t events = 0;

  // CG: particle positions, fixed step and relocation probability dL/(dL+N).
  std::vector<std::uint32_t> positions;
  double cg_step = 0.0;
  double cg_relocation_probability = 0.0;
  std::uint64_t cg_steps = 0;
  double cg_time_origin = 0.0;

  // TA / ZRP: per-site exit rates.
  SumTree<double> rates;
};

namespace detail {

inline double site_rate(const SimState& s, std::size_t x) {
  const auto L = static_cast<std::size_t>(s.params.L);
  const auto& c = s.config;
  if (s.kind == DynamicsKind::TA_ring) return ta_rate(c[x], c[(x + 1) % L], s.params.d);
  return zrp_rate(c[x], s.params.d);
}

inline void rebuild_rates(SimState& s) {
  const auto L = static_cast<std::size_t>(s.params.L);
  std::vector<double> r(L);
  for (std::size_t x = 0; x < L; ++x) r[x] = site_rate(s, x);
  s.rates.assign(r);
}

}  // namespace detail

/// Places each of the N particles on an independent uniform site.
inline SimState init_uniform(const ModelParams& p, DynamicsKind kind, std::uint64_t seed) {
  p.validate();
  SimState s;
  s.params = p;
  s.kind = kind;
  s.seed = seed;
  s.rng = make_engine(seed);
  std::vector<std::int64_t> eta(static_cast<std::size_t>(p.L), 0);
  s.positions.resize(static_cast<std::size_t>(p.N));
  for (auto& pos : s.positions) {
    pos = static_cast<std::uint32_t>(uniform_index(s.rng, static_cast<std::uint64_t>(p.L)));
    ++eta[pos];
  }
  s.config = Configuration(std::move(eta));
  if (kind == DynamicsKind::CG) {
    const double dl = p.d * static_cast<double>(p.L);
    const double n = static_cast<double>(p.N);
    s.cg_step = p.N > 0 ? 1.0 / (n * (dl + n)) : 0.0;
    s.cg_relocation_probability = dl / (dl + n);
  } else {
    s.positions.clear();
    detail::rebuild_rates(s);
  }
  return s;
}

/// No-op observer for the run_* functions.
struct NoObserver {
  void operator()(const Configuration&, double) const {}
};

/// Complete-graph dynamics, one rejection step at a time:
/// pick particle i; with probability dL/(dL+N) move it to a uniform site
/// (its own site allowed), otherwise move it onto the site of a uniformly
/// chosen particle j (j = i allowed); advance time by 1/(N(dL+N)).
///
/// The observer sees (configuration before the step, step length).
template <class Observer = NoObserver>
void run_cg(SimState& s, double t_target, Observer&& obs = {}) {
  if (s.kind != DynamicsKind::CG) throw std::invalid_argument("run_cg needs a CG state");
  if (s.params.N == 0) {
    s.time = std::max(s.time, t_target);
    return;
  }
  const auto n = static_cast<std::uint64_t>(s.params.N);
  const auto L = static_cast<std::uint64_t>(s.params.L);
  auto& pos = s.positions;
  while (s.time < t_target) {
    obs(std::as_const(s.config), s.cg_step);
    const auto i = uniform_index(s.rng, n);
    const auto x = pos[i];
    std::uint32_t y;
    if (uniform01(s.rng) < s.cg_relocation_probability) {
      y = static_cast<std::uint32_t>(uniform_index(s.rng, L));
    } else {
      y = pos[uniform_index(s.rng, n)];
    }
    pos[i] = y;
    s.config.move(x, y);
    ++s.cg_steps;
    ++s.events;
    s.time = s.cg_time_origin + static_cast<double>(s.cg_steps) * s.cg_step;
  }
}

namespace detail {

template <class Observer>
void run_ring(SimState& s, double t_target, Observer&& obs) {
  const auto L = static_cast<std::size_t>(s.params.L);
  while (true) {
    const double total = s.rates.total();
    if (!(total > 0.0)) {
      if (t_target > s.time) obs(std::as_const(s.config), t_target - s.time);
      s.time = std::max(s.time, t_target);
      return;
    }
    const double dt = exponential(s.rng, total);
    if (s.time + dt >= t_target) {
      // memoryless clock: the pending event is simply discarded
      if (t_target > s.time) obs(std::as_const(s.config), t_target - s.time);
      s.time = std::max(s.time, t_target);
      return;
    }
    obs(std::as_const(s.config), dt);
    s.time += dt;
    const auto x = s.rates.find(uniform01(s.rng) * total);
    const auto y = (x + 1) % L;
    s.config.move(x, y);
    ++s.events;
    s.rates.set(x, site_rate(s, x));
    s.rates.set(y, site_rate(s, y));
    if (s.kind == DynamicsKind::TA_ring) {
      const auto left = (x + L - 1) % L;
      s.rates.set(left, site_rate(s, left));
    }
  }
}

}  // namespace detail

/// Totally asymmetric inclusion process on a ring: site x fires at rate
/// eta_x (d + eta_{x+1}) and sends one particle to x+1 (Gillespie).
/// The observer sees (configuration, holding time spent in it).
template <class Observer = NoObserver>
void run_ta(SimState& s, double t_target, Observer&& obs = {}) {
  if (s.kind != DynamicsKind::TA_ring) throw std::invalid_argument("run_ta needs a TA state");
  detail::run_ring(s, t_target, obs);
}

/// Totally asymmetric zero-range process on a ring with u(n) = n/(d+n-1).
template <class Observer = NoObserver>
void run_zrp(SimState& s, double t_target, Observer&& obs = {}) {
  if (s.kind != DynamicsKind::ZRP_ring) throw std::invalid_argument("run_zrp needs a ZRP state");
  detail::run_ring(s, t_target, obs);
}

template <class Observer = NoObserver>
void run(SimState& s, double t_target, Observer&& obs = {}) {
  switch (s.kind) {
    case DynamicsKind::CG: run_cg(s, t_target, obs); break;
    case DynamicsKind::TA_ring: run_ta(s, t_target, obs); break;
    case DynamicsKind::ZRP_ring: run_zrp(s, t_target, obs); break;
  }
}

/// Sum of all exit rates recomputed from the configuration (TA / ZRP).
inline double total_rate_from_scratch(const SimState& s) {
  double total = 0.0;
  for (std::size_t x = 0; x < static_cast<std::size_t>(s.params.L); ++x) total += detail::site_rate(s, x);
  return total;
}

/// Outgoing moves of the implemented dynamics from a configuration.
/// For TA/ZRP `weight` is a continuous-time rate; for CG it is the probability
/// that one rejection step moves a particle from `from` to `to` (from != to;
/// the remaining mass of the step is a self-loop).
struct Move {
  std::size_t from;
  std::size_t to;
  double weight;
};

inline std::vector<Move> outgoing_moves(DynamicsKind kind, const Configuration& c, double d) {
  std::vector<Move> out;
  const auto L = static_cast<std::size_t>(c.sites());
  switch (kind) {
    case DynamicsKind::TA_ring:
    case DynamicsKind::ZRP_ring:
      for (std::size_t x = 0; x < L; ++x) {
        const auto y = (x + 1) % L;
        if (x == y) continue;
        const double r = kind == DynamicsKind::TA_ring ? ta_rate(c[x], c[y], d) : zrp_rate(c[x], d);
        if (r > 0.0) out.push_back({x, y, r});
      }
      break;
    case DynamicsKind::CG: {
      const double n = static_cast<double>(c.total());
      if (c.total() == 0) break;
      const double dl = d * static_cast<double>(L);
      const double relocate = dl / (dl + n);
      for (std::size_t x = 0; x < L; ++x) {
        if (c[x] == 0) continue;
        for (std::size_t y = 0; y < L; ++y) {
          if (y == x) continue;
          const double p = (static_cast<double>(c[x]) / n) *
                           (relocate / static_cast<double>(L) + (1.0 - relocate) * static_cast<double>(c[y]) / n);
          if (p > 0.0) out.push_back({x, y, p});
        }
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Burn-in and stationary sampling.

/// Equilibration time c * tau_a: c L / d for ring dynamics (TA, ZRP) and
/// c L for CG.  The CG value is in mean-field units (jump kernel 1/(L-1));
/// see simulation_time() for the conversion to the CG clock.
inline double default_burn_in(DynamicsKind kind, const ModelParams& p, double c = 10.0) {
  const double L = static_cast<double>(p.L);
  if (kind == DynamicsKind::CG) return c * L;
  return c * L / p.d;
}

/// Converts a time in the units of default_burn_in to the simulator's clock.
/// The CG clock runs every ordered pair of sites at kernel 1, i.e. L-1 times
/// faster than the mean-field time scale.
inline double simulation_time(DynamicsKind kind, const ModelParams& p, double t) {
  if (kind == DynamicsKind::CG) return t / static_cast<double>(std::max<std::int64_t>(p.L - 1, 1));
  return t;
}

struct StationarySample {
  Configuration config;
  std::uint64_t seed = 0;    ///< stream seed of the run that produced it
  std::size_t index = 0;     ///< position within that run
  double time = 0.0;         ///< simulator clock at which it was taken
};

/// Burn-in then `n_samples` snapshots of one trajectory, `spacing` apart.
/// Burn-in and spacing are in the units of default_burn_in; spacing defaults
/// to one burn-in time.
inline std::vector<StationarySample> sample_stationary(const ModelParams& p, DynamicsKind kind,
                                                       std::size_t n_samples, std::uint64_t seed,
                                                       std::optional<double> spacing = std::nullopt,
                                                       double burn_in_factor = 10.0) {
  std::vector<StationarySample> out;
  if (n_samples == 0) return out;
  const double burn = default_burn_in(kind, p, burn_in_factor);
  const double gap = spacing.value_or(burn);
  if (!(gap > 0.0)) throw DomainError("sample spacing must be positive");
  auto s = init_uniform(p, kind, seed);
  const double t0 = simulation_time(kind, p, burn);
  const double dt = simulation_time(kind, p, gap);
  run(s, t0);
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (i > 0) run(s, t0 + static_cast<double>(i) * dt);
    out.push_back({s.config, seed, i, s.time});
  }
  return out;
}

/// Independent replicas: replica r starts from derive_seed(master, r), runs
/// burn-in and returns `per_replica` samples.  Results are ordered by
/// (replica, sample) whatever the number of worker threads.
inline std::vector<StationarySample> sample_replicas(const ModelParams& p, DynamicsKind kind,
                                                     std::size_t replicas, std::size_t per_replica,
                                                     std::uint64_t master_seed,
                                                     std::optional<double> spacing = std::nullopt,
                                                     double burn_in_factor = 10.0, unsigned jobs = 1) {
  std::vector<std::vector<StationarySample>> per(replicas);
  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t r = worker; r < replicas; r += stride) {
      per[r] = sample_stationary(p, kind, per_replica, derive_seed(master_seed, r), spacing, burn_in_factor);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(replicas, 1))));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back([&work, w, jobs] { work(w, jobs); });
    for (auto& t : pool) t.join();
  }
  std::vector<StationarySample> out;
  out.reserve(replicas * per_replica);
  for (auto& v : per) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace incproc
