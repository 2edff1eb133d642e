#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "incproc/incproc.hpp"
#include "incproc/io.hpp"

using namespace incproc;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::optional<std::int64_t> L;
  std::optional<std::int64_t> N;
  std::optional<double> d;
  std::optional<double> dl;
  std::optional<double> rho;
  std::optional<double> gamma;
  std::string kind = "cg";
  std::uint64_t seed = 1;
  std::size_t replicas = 1;
  std::size_t resamples = 5;
  std::size_t samples = 1;
  double burn_in_factor = 10.0;
  std::optional<double> spacing;
  unsigned jobs = 1;
  std::string out = "-";
  std::string format = "csv";
  std::string config;
  std::string stats = "r_k,max_fraction,occupied_sites,phase,moment";
  std::size_t kmax = 8;
  std::optional<std::int64_t> cutoff;
  double moment = 2.0;
  std::string configs_out;
  std::optional<std::int64_t> truncation;
  std::string table_out;
  std::string regime = "intermediate";
  std::optional<std::string> speed;
  double alpha = 1.0;
  std::size_t draws = 100000;
  std::string source = "gem";
  std::int64_t lmin = 64;
  std::int64_t lmax = 1024;
  std::string picks = "1,2,3";
};

// ---------------------------------------------------------------------------
// Command-line definition.  Every option name doubles as a config-file key.

void add_model(CLI::App* app, Options& o, bool with_gamma = false) {
  app->add_option("--L", o.L, "number of sites")->check(CLI::PositiveNumber);
  app->add_option("--N", o.N, "number of particles")->check(CLI::NonNegativeNumber);
  auto* d = app->add_option("--d", o.d, "diffusion parameter d");
  auto* dl = app->add_option("--dl", o.dl, "d times L (sets d = dl / L)");
  d->excludes(dl);
  if (with_gamma) {
    auto* g = app->add_option("--gamma", o.gamma, "d = L^-gamma");
    g->excludes(d)->excludes(dl);
  }
}

void add_sim(CLI::App* app, Options& o) {
  app->add_option("--kind", o.kind, "dynamics: cg, ta or zrp")->check(CLI::IsMember({"cg", "ta", "zrp"}));
  app->add_option("--replicas", o.replicas, "independent trajectories");
  app->add_option("--samples", o.samples, "stationary samples per trajectory");
  app->add_option("--resamples", o.resamples, "size-biased resamples per configuration");
  app->add_option("--burn-in-factor", o.burn_in_factor, "burn-in in units of the aggregation time")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--spacing", o.spacing, "time between samples in units of the aggregation time");
  app->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out", o.out, "output path, - for stdout");
  app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--config", o.config, "key=value configuration file (flags win)");
}

struct Cli {
  CLI::App app{"Inclusion-process simulation and exact stationary numerics"};
  Options o;
  std::map<std::string, CLI::App*> subs;

  Cli() {
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    auto* sim = app.add_subcommand("simulate", "stationary samples and their statistics");
    add_model(sim, o);
    add_sim(sim, o);
    sim->add_option("--stats", o.stats, "comma list of r_k,max_fraction,occupied_sites,phase,moment");
    sim->add_option("--kmax", o.kmax, "largest k for r_k");
    sim->add_option("--cutoff", o.cutoff, "phase cutoff K (default floor(sqrt(N)))");
    sim->add_option("--moment", o.moment, "moment order a")->check(CLI::PositiveNumber);
    sim->add_option("--configs-out", o.configs_out, "also write the sampled configurations here");

    auto* exact = app.add_subcommand("exact", "partition table, marginals and closed-form residuals");
    add_model(exact, o);
    exact->add_option("--truncation", o.truncation, "maximal single-site occupation M")
        ->check(CLI::NonNegativeNumber);
    exact->add_option("--table-out", o.table_out, "write the binary partition table here");

    auto* ldp = app.add_subcommand("ldp", "rate functions of the maximum occupation");
    add_model(ldp, o, true);
    ldp->add_option("--rho", o.rho, "density N/L (default 1)");
    ldp->add_option("--regime", o.regime, "fluid, intermediate or complete")
        ->check(CLI::IsMember({"fluid", "intermediate", "complete"}));
    ldp->add_option("--speed", o.speed, "L, dL or logL")->check(CLI::IsMember({"L", "dL", "logL"}));

    auto* gem = app.add_subcommand("gemtest", "mean R_k against (alpha/(1+alpha))^k");
    add_model(gem, o);
    add_sim(gem, o);
    gem->add_option("--source", o.source, "gem or simulate")->check(CLI::IsMember({"gem", "simulate"}));
    gem->add_option("--alpha", o.alpha, "GEM parameter")->check(CLI::PositiveNumber);
    gem->add_option("--draws", o.draws, "GEM draws");
    gem->add_option("--kmax", o.kmax, "largest k");

    auto* tails = app.add_subcommand("tails", "tails of d times the size-biased picks");
    add_model(tails, o);
    add_sim(tails, o);
    tails->add_option("--picks", o.picks, "comma list of pick indices i");

    auto* ent = app.add_subcommand("entropy", "relative entropy rate along doubling L");
    add_model(ent, o);
    ent->add_option("--rho", o.rho, "density (default 2)");
    ent->add_option("--lmin", o.lmin, "smallest L")->check(CLI::PositiveNumber);
    ent->add_option("--lmax", o.lmax, "largest L")->check(CLI::PositiveNumber);

    for (auto* s : {sim, exact, ldp, gem, tails, ent}) {
      add_common(s, o);
      subs[s->get_name()] = s;
    }
  }

  CLI::App* selected() const {
    for (const auto& [name, s] : subs) {
      if (s->parsed()) return s;
    }
    return nullptr;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads key=value lines; '#' starts a comment.  Keys are option names
/// without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

/// Parses argv, folding in the config file: keys not given as flags are
/// appended as flags and the whole command line is parsed again.
void parse(Cli& cli, int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  auto first = args;  // parse consumes its argument
  cli.app.parse(first);
  auto* sub = cli.selected();
  if (sub == nullptr || cli.o.config.empty()) return;

  static const std::map<std::string, std::vector<std::string>> exclusive = {
      {"d", {"dl", "gamma"}}, {"dl", {"d", "gamma"}}, {"gamma", {"d", "dl"}}};
  std::vector<std::string> extra;
  std::set<std::string> seen;
  for (const auto& [key, value] : read_config_file(cli.o.config)) {
    if (key == "config") throw ConfigError("config files cannot include other config files");
    auto* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown config key '" + key + "' for " + sub->get_name());
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    if (opt->count() > 0) continue;
    bool shadowed = false;
    if (auto it = exclusive.find(key); it != exclusive.end()) {
      for (const auto& other : it->second) {
        auto* o2 = sub->get_option_no_throw("--" + other);
        shadowed = shadowed || (o2 != nullptr && o2->count() > 0);
      }
    }
    if (shadowed) continue;
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  // CLI11 consumes the reversed vector from the back
  std::vector<std::string> merged(extra.rbegin(), extra.rend());
  merged.insert(merged.end(), args.begin(), args.end());
  cli.o = Options{};
  cli.app.clear();
  cli.app.parse(merged);
}

// ---------------------------------------------------------------------------
// Output: a metadata block followed by one table.

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  Json summary;  ///< extra JSON-only information
};

std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return format_double(x);
  }
  return v.dump();
}

Json json_cell(const Json& v) {
  if (v.is_number_float() && !std::isfinite(v.get<double>())) {
    const double x = v.get<double>();
    return std::isnan(x) ? Json("nan") : Json(x > 0 ? "inf" : "-inf");
  }
  return v;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path == "-") return std::cout;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ResourceError("cannot write " + path);
  return file;
}

void emit(const Options& o, const Json& meta, const Table& t) {
  std::ofstream file;
  auto& os = open_output(o.out, file);
  if (o.format == "csv") {
    for (const auto& [k, v] : meta.items()) os << "# " << k << '=' << csv_cell(v) << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << '\n';
    }
  } else {
    Json doc;
    doc["metadata"] = meta;
    if (!t.summary.is_null()) doc["summary"] = t.summary;
    Json records = Json::array();
    for (const auto& row : t.rows) {
      Json r;
      for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = json_cell(row[i]);
      records.push_back(std::move(r));
    }
    doc["records"] = std::move(records);
    os << doc.dump(1) << '\n';
  }
  os.flush();
  if (!os) throw ResourceError("write to " + o.out + " failed");
}

// ---------------------------------------------------------------------------
// Shared parameter resolution.

ModelParams resolve_params(const Options& o, std::optional<std::int64_t> default_N = std::nullopt) {
  if (!o.L) throw ConfigError("--L is required");
  ModelParams p;
  p.L = *o.L;
  if (o.N) {
    p.N = *o.N;
  } else if (default_N) {
    p.N = *default_N;
  } else {
    throw ConfigError("--N is required");
  }
  if (o.d) {
    p.d = *o.d;
  } else if (o.dl) {
    p.d = *o.dl / static_cast<double>(p.L);
  } else {
    throw ConfigError("one of --d or --dl is required");
  }
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

Json base_metadata(const std::string& command, const Options& o) {
  Json m;
  m["program"] = "incproc";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = o.seed;
  return m;
}

void add_model_meta(Json& m, const ModelParams& p) {
  m["L"] = p.L;
  m["N"] = p.N;
  m["d"] = p.d;
}

void add_sim_meta(Json& m, const Options& o) {
  m["kind"] = o.kind;
  m["replicas"] = o.replicas;
  m["samples"] = o.samples;
  m["resamples"] = o.resamples;
  m["burn_in_factor"] = o.burn_in_factor;
  m["spacing"] = o.spacing ? *o.spacing : o.burn_in_factor;
  m["jobs"] = o.jobs;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<StationarySample> run_samples(const Options& o, const ModelParams& p, DynamicsKind kind) {
  const double tau = default_burn_in(kind, p, 1.0);
  std::optional<double> spacing;
  if (o.spacing) {
    if (!(*o.spacing > 0.0)) throw ConfigError("--spacing must be positive");
    spacing = *o.spacing * tau;
  } else if (o.burn_in_factor == 0.0) {
    spacing = tau;
  }
  return sample_replicas(p, kind, o.replicas, o.samples, o.seed, spacing, o.burn_in_factor, o.jobs);
}

// ---------------------------------------------------------------------------
// Commands.

void cmd_simulate(const Options& o) {
  const auto p = resolve_params(o);
  const auto kind = parse_kind(o.kind);
  const auto stats = split_list(o.stats);
  static const std::set<std::string> known = {"r_k", "max_fraction", "occupied_sites", "phase", "moment"};
  for (const auto& s : stats) {
    if (!known.count(s)) throw ConfigError("unknown statistic '" + s + "'");
  }
  auto has = [&](const char* s) { return std::find(stats.begin(), stats.end(), s) != stats.end(); };
  const auto K = o.cutoff.value_or(static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(p.N)))));
  const auto kmax = std::min<std::size_t>(o.kmax, static_cast<std::size_t>(p.L));
  if (has("r_k") && p.N == 0) throw ConfigError("r_k needs N >= 1");

  auto meta = base_metadata("simulate", o);
  add_model_meta(meta, p);
  add_sim_meta(meta, o);
  meta["stats"] = o.stats;
  meta["kmax"] = kmax;
  meta["cutoff"] = K;
  meta["moment"] = o.moment;

  const auto samples = run_samples(o, p, kind);

  Table t;
  t.columns = {"replica", "sample", "resample", "statistic", "k", "value"};
  std::vector<Configuration> configs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto replica = o.samples ? i / o.samples : 0;
    const auto& c = s.config;
    configs.push_back(c);
    auto row = [&](std::size_t resample, const char* stat, Json k, double v) {
      t.rows.push_back({replica, s.index, resample, stat, std::move(k), v});
    };
    if (has("max_fraction") && p.N > 0) row(0, "max_fraction", nullptr, max_fraction(c));
    if (has("occupied_sites")) row(0, "occupied_sites", nullptr, static_cast<double>(occupied_sites(c)));
    if (has("phase")) {
      const auto ph = phase_decomposition(c, K);
      row(0, "bulk_mass_fraction", nullptr, ph.bulk_mass_fraction);
      row(0, "condensed_mass_fraction", nullptr, ph.condensed_mass_fraction);
      row(0, "condensed_volume_fraction", nullptr, ph.condensed_volume_fraction);
    }
    if (has("moment")) {
      row(0, "moment", nullptr, empirical_moment(std::span<const Configuration>(&c, 1), o.moment));
    }
    if (has("r_k")) {
      auto rng = make_engine(derive_seed(s.seed, 1 + s.index));
      for (std::size_t r = 0; r < o.resamples; ++r) {
        const auto sb = size_biased_permutation(c, rng);
        for (std::size_t k = 1; k <= kmax; ++k) row(r, "r_k", k, r_k(sb, k));
      }
    }
  }

  if (!o.configs_out.empty()) {
    std::ofstream file;
    auto& os = open_output(o.configs_out, file);
    if (o.format == "csv") {
      for (const auto& [k, v] : meta.items()) os << "# " << k << '=' << csv_cell(v) << '\n';
      os << "replica,sample," << configuration_csv_header(p.L) << '\n';
      for (std::size_t i = 0; i < samples.size(); ++i) {
        os << (o.samples ? i / o.samples : 0) << ',' << samples[i].index << ',';
        write_configuration_csv(os, samples[i].config, p.d, kind, samples[i].seed);
      }
    } else {
      Json doc;
      doc["metadata"] = meta;
      Json recs = Json::array();
      for (std::size_t i = 0; i < samples.size(); ++i) {
        auto r = configuration_json(samples[i].config, p.d, kind, samples[i].seed);
        r["replica"] = o.samples ? i / o.samples : 0;
        r["sample"] = samples[i].index;
        recs.push_back(std::move(r));
      }
      doc["records"] = std::move(recs);
      os << doc.dump(1) << '\n';
    }
    if (!os) throw ResourceError("write to " + o.configs_out + " failed");
  }
  if (!configs.empty() && has("moment")) t.summary["moment_mean"] = empirical_moment(configs, o.moment);
  emit(o, meta, t);
}

void cmd_exact(const Options& o) {
  const auto p = resolve_params(o);
  std::optional<std::int64_t> trunc = o.truncation;
  if (trunc && *trunc >= p.N) trunc.reset();  // inactive truncation is the untruncated problem

  auto meta = base_metadata("exact", o);
  meta.erase("seed");
  add_model_meta(meta, p);
  meta["truncation"] = trunc ? Json(*trunc) : Json("none");

  if (trunc && *trunc == 0 && !o.table_out.empty()) {
    throw ConfigError("truncation 0 cannot be stored in a binary table");
  }
  const auto t = build_partition_table(p, trunc);
  if (!o.table_out.empty()) {
    std::ofstream f(o.table_out, std::ios::binary | std::ios::trunc);
    if (!f) throw ResourceError("cannot write " + o.table_out);
    write_table_binary(t, f);
    if (!f) throw ResourceError("write to " + o.table_out + " failed");
  }

  Table out;
  out.columns = {"l", "n", "logZ", "logZ_closed", "residual", "canonical_pmf", "size_biased_pmf"};
  double worst = 0.0;
  const double lz = t.log_z(p.L, p.N);
  for (std::int64_t l = 1; l <= p.L; ++l) {
    for (std::int64_t n = 0; n <= p.N; ++n) {
      const double v = t.log_z(l, n);
      std::vector<Json> row{l, n, v, nullptr, nullptr, nullptr, nullptr};
      if (!trunc) {
        const double c = log_Z_closed(l, n, p.d);
        const double r = std::abs(v - c) / std::max(1.0, std::abs(c));
        worst = std::max(worst, r);
        row[3] = c;
        row[4] = r;
      }
      if (l == p.L) {
        // marginals of site 1 under the (possibly truncated) canonical measure
        const bool allowed = !trunc || n <= *trunc;
        const double lw = allowed ? log_weight(n, p.d) + t.log_z(p.L - 1, p.N - n) - lz : kLogZero;
        const double pmf = std::isfinite(lw) ? std::exp(lw) : 0.0;
        row[5] = pmf;
        row[6] = p.N > 0 ? static_cast<double>(p.L) / static_cast<double>(p.N) * static_cast<double>(n) * pmf
                         : (n == 0 ? 1.0 : 0.0);
        if (p.N == 0) row[6] = nullptr;
      }
      out.rows.push_back(std::move(row));
    }
  }
  if (!trunc) out.summary["max_residual"] = worst;
  emit(o, meta, out);
}

void cmd_ldp(const Options& o) {
  if (!o.L) throw ConfigError("--L is required");
  const std::int64_t L = *o.L;
  if (L < 1) throw ConfigError("--L must be >= 1");
  if (o.N && o.rho) throw ConfigError("give --N or --rho, not both");
  const double rho = o.N ? static_cast<double>(*o.N) / static_cast<double>(L) : o.rho.value_or(1.0);
  const std::int64_t N = o.N ? *o.N : static_cast<std::int64_t>(std::llround(rho * static_cast<double>(L)));
  if (!(rho > 0.0)) throw ConfigError("density must be positive");

  Speed speed;
  double d = 0.0;
  double gamma = o.gamma.value_or(2.0);
  const std::string want_speed =
      o.speed.value_or(o.regime == "fluid" ? "L" : o.regime == "intermediate" ? "dL" : "logL");
  if (o.regime == "fluid") {
    if (want_speed != "L") throw ConfigError("fluid regime uses speed L");
    speed = Speed::L;
    d = o.d ? *o.d : o.dl ? *o.dl / static_cast<double>(L) : 1.0;
    if (o.gamma) throw ConfigError("--gamma belongs to the complete regime");
  } else if (o.regime == "intermediate") {
    if (want_speed != "dL") throw ConfigError("intermediate regime uses speed dL");
    speed = Speed::dL;
    d = o.d ? *o.d : o.dl ? *o.dl / static_cast<double>(L) : 1.0 / std::sqrt(static_cast<double>(L));
    if (o.gamma) throw ConfigError("--gamma belongs to the complete regime");
  } else {
    if (want_speed != "logL") throw ConfigError("complete regime uses speed logL");
    speed = Speed::logL;
    if (o.d || o.dl) throw ConfigError("complete regime takes --gamma, d = L^-gamma");
    if (!(gamma > 1.0)) throw ConfigError("--gamma must exceed 1");
    d = std::pow(static_cast<double>(L), -gamma);
  }
  if (!(d > 0.0)) throw ConfigError("d must be positive");

  const ModelParams p{L, N, d};
  auto meta = base_metadata("ldp", o);
  meta.erase("seed");
  add_model_meta(meta, p);
  meta["rho"] = rho;
  meta["regime"] = o.regime;
  meta["speed"] = std::string(to_string(speed));
  if (o.regime == "complete") meta["gamma"] = gamma;

  const auto curve = empirical_rate(exact_max_distribution(p), speed);
  Table t;
  t.columns = {"m", "closed_form", "finite_size_estimate", "L", "d", "speed"};
  for (std::size_t M = 0; M < curve.m.size(); ++M) {
    const double m = curve.m[M];
    Json closed = nullptr;
    if (o.regime == "fluid" && m < rho) closed = rate_fluid({rho, m, d, gamma});
    if (o.regime == "intermediate" && m < rho) closed = rate_intermediate(rho, m);
    if (o.regime == "complete" && m > 0.0 && m <= rho) closed = rate_complete(rho, m, gamma);
    t.rows.push_back({m, closed, curve.value[M], L, d, std::string(to_string(speed))});
  }
  emit(o, meta, t);
}

void cmd_gemtest(const Options& o) {
  auto meta = base_metadata("gemtest", o);
  meta["source"] = o.source;
  Table t;
  t.columns = {"source", "alpha", "k", "mean", "se", "count", "reference", "z"};
  auto push = [&](double alpha, std::size_t k, const Summary& s) {
    const double ref = std::pow(alpha / (1.0 + alpha), static_cast<double>(k));
    const double z = s.se > 0.0 ? (s.mean - ref) / s.se : (s.mean == ref ? 0.0 : std::numeric_limits<double>::infinity());
    t.rows.push_back({o.source, alpha, k, s.mean, s.se, s.count, ref, z});
  };
  if (o.source == "gem") {
    meta["alpha"] = o.alpha;
    meta["draws"] = o.draws;
    meta["kmax"] = o.kmax;
    auto rng = make_engine(o.seed);
    std::vector<std::vector<double>> r(o.kmax);
    for (std::size_t i = 0; i < o.draws; ++i) {
      const auto g = sample_gem(o.alpha, o.kmax, rng);
      double rest = 1.0;
      for (std::size_t k = 0; k < o.kmax; ++k) {
        rest -= g.parts[k];
        r[k].push_back(rest);
      }
    }
    if (o.draws > 0) {
      for (std::size_t k = 1; k <= o.kmax; ++k) push(o.alpha, k, summarize(r[k - 1]));
    }
  } else {
    const auto p = resolve_params(o);
    const auto kind = parse_kind(o.kind);
    if (p.N == 0) throw ConfigError("gemtest needs N >= 1");
    const double alpha = p.d * static_cast<double>(p.L);
    add_model_meta(meta, p);
    add_sim_meta(meta, o);
    meta["alpha"] = alpha;
    meta["kmax"] = o.kmax;
    const auto kmax = std::min<std::size_t>(o.kmax, static_cast<std::size_t>(p.L));
    const auto samples = run_samples(o, p, kind);
    // resamples are averaged per configuration; errors are over configurations
    std::vector<std::vector<double>> r(kmax);
    for (const auto& s : samples) {
      auto rng = make_engine(derive_seed(s.seed, 1 + s.index));
      std::vector<double> acc(kmax, 0.0);
      for (std::size_t q = 0; q < o.resamples; ++q) {
        const auto sb = size_biased_permutation(s.config, rng);
        for (std::size_t k = 1; k <= kmax; ++k) acc[k - 1] += r_k(sb, k) / static_cast<double>(o.resamples);
      }
      for (std::size_t k = 0; k < kmax; ++k) r[k].push_back(acc[k]);
    }
    if (!samples.empty() && o.resamples > 0) {
      for (std::size_t k = 1; k <= kmax; ++k) push(alpha, k, summarize(r[k - 1]));
    }
  }
  emit(o, meta, t);
}

void cmd_tails(const Options& o) {
  const auto p = resolve_params(o);
  if (p.N == 0) throw ConfigError("tails needs N >= 1");
  const auto kind = parse_kind(o.kind);
  std::vector<std::size_t> picks;
  for (const auto& s : split_list(o.picks)) {
    std::size_t v = 0;
    try {
      v = static_cast<std::size_t>(std::stoul(s));
    } catch (const std::exception&) {
      throw ConfigError("bad pick index '" + s + "'");
    }
    if (v < 1 || v > static_cast<std::size_t>(p.L)) throw ConfigError("pick index out of range: " + s);
    picks.push_back(v);
  }
  const double rho = p.density();

  auto meta = base_metadata("tails", o);
  add_model_meta(meta, p);
  add_sim_meta(meta, o);
  meta["picks"] = o.picks;

  const auto samples = run_samples(o, p, kind);
  std::vector<std::vector<std::int64_t>> values(picks.size());
  for (const auto& s : samples) {
    auto rng = make_engine(derive_seed(s.seed, 1 + s.index));
    for (std::size_t r = 0; r < o.resamples; ++r) {
      const auto sb = size_biased_permutation(s.config, rng);
      for (std::size_t j = 0; j < picks.size(); ++j) values[j].push_back(sb.values[picks[j] - 1]);
    }
  }

  // reference: size-biased grand-canonical law and its exponential limit, both in u = d n
  std::vector<double> pred_cdf(static_cast<std::size_t>(p.N + 1), 0.0);
  for (std::int64_t n = 1; n <= p.N; ++n) pred_cdf[n] = pred_cdf[n - 1] + sized_biased_gc_pmf(n, rho, p.d);
  const auto exp_cdf = [rho](double u) { return u <= 0.0 ? 0.0 : -std::expm1(-u / rho); };

  Table t;
  t.columns = {"i", "n", "u", "empirical_tail", "exp_tail", "predicted_tail"};
  t.summary = Json::array();
  for (std::size_t j = 0; j < picks.size(); ++j) {
    if (values[j].empty()) continue;
    std::vector<double> v(values[j].begin(), values[j].end());
    const EmpiricalDistribution emp(v);
    const auto atoms = emp.atoms();
    double below = 0.0;
    for (std::size_t a = 0; a < atoms.x.size(); ++a) {
      below += atoms.p[a];
      const auto n = static_cast<std::int64_t>(atoms.x[a]);
      const double u = p.d * atoms.x[a];
      t.rows.push_back({picks[j], n, u, std::max(0.0, 1.0 - below), 1.0 - exp_cdf(u), 1.0 - pred_cdf[n]});
    }
    std::vector<double> scaled(v);
    for (auto& x : scaled) x *= p.d;
    Json s;
    s["i"] = picks[j];
    s["count"] = v.size();
    s["ks_exponential"] = ks_distance(EmpiricalDistribution(scaled), exp_cdf);
    s["sup_predicted"] =
        lattice_sup_distance(emp, [&](std::int64_t n) { return pred_cdf[static_cast<std::size_t>(n)]; }, 1.0, p.N);
    t.summary.push_back(std::move(s));
  }
  emit(o, meta, t);
}

void cmd_entropy(const Options& o) {
  if (o.N) throw ConfigError("entropy takes --rho, not --N");
  if (o.lmin > o.lmax) throw ConfigError("--lmin exceeds --lmax");
  const double rho = o.rho.value_or(2.0);
  if (!(rho > 0.0)) throw ConfigError("--rho must be positive");
  if (o.dl) throw ConfigError("entropy takes a fixed --d");
  const double d = o.d.value_or(1.0);
  if (!(d > 0.0)) throw ConfigError("--d must be positive");
  const double phi = fugacity_Phi(rho, d);

  auto meta = base_metadata("entropy", o);
  meta.erase("seed");
  meta["d"] = d;
  meta["rho"] = rho;
  meta["lmin"] = o.lmin;
  meta["lmax"] = o.lmax;

  Table t;
  t.columns = {"L", "N", "d", "rho", "phi", "relative_entropy_rate"};
  for (std::int64_t L = o.lmin; L <= o.lmax; L *= 2) {
    const auto N = static_cast<std::int64_t>(std::llround(rho * static_cast<double>(L)));
    const ModelParams p{L, N, d};
    t.rows.push_back({L, N, d, p.density(), phi, relative_entropy_rate(p, phi)});
  }
  emit(o, meta, t);
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  try {
    parse(cli, argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.app.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.app.exit(e);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const auto* sub = cli.selected();
  const std::string name = sub ? sub->get_name() : "";
  try {
    if (name == "simulate") cmd_simulate(cli.o);
    if (name == "exact") cmd_exact(cli.o);
    if (name == "ldp") cmd_ldp(cli.o);
    if (name == "gemtest") cmd_gemtest(cli.o);
    if (name == "tails") cmd_tails(cli.o);
    if (name == "entropy") cmd_entropy(cli.o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BudgetError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::bad_alloc&) {
    std::cerr << "resource error: out of memory\n";
    return kExitResource;
  }
  return kExitOk;
}
