#include "mfg/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include "json.hpp"

#include "csv.h"
#include "mfg/metrics.h"

#ifndef MFG_DATA_DIR
#define MFG_DATA_DIR "data"
#endif

namespace mfg {

using json = nlohmann::json;

double default_inverse_temperature(const std::string& env_kind) {
  if (env_kind == "ring-road") return 1e9;
  if (env_kind == "flocking") return 1e6;
  if (env_kind == "sioux-falls") return 1e3;
  if (env_kind == "toy") return 1e9;
  throw ConfigError("env: unknown kind '" + env_kind + "'");
}

Algorithm fpi_algorithm(const std::string& variant) {
  switch (parse_variant(variant)) {
    case FpiVariant::kVanilla: return Algorithm::kFpiVanilla;
    case FpiVariant::kFp: return Algorithm::kFpiFp;
    case FpiVariant::kMd: return Algorithm::kFpiMd;
    case FpiVariant::kEr: return Algorithm::kFpiEr;
  }
  return Algorithm::kFpiVanilla;
}

namespace {

// Typed access with the field path in every error message.
class Fields {
 public:
  Fields(const json& obj, std::string where)
      : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_.contains(key);
  }
  std::string path(const char* key) const {
    return where_.empty() ? key : where_ + "." + key;
  }
  const json& at(const char* key) const { return obj_.at(key); }

  void get(const char* key, std::string& out) {
    if (!has(key)) return;
    if (!at(key).is_string()) throw ConfigError(path(key) + ": expected a string");
    out = at(key).get<std::string>();
  }
  void get(const char* key, double& out) {
    if (!has(key)) return;
    if (!at(key).is_number()) throw ConfigError(path(key) + ": expected a number");
    out = at(key).get<double>();
  }
  void get(const char* key, bool& out) {
    if (!has(key)) return;
    if (!at(key).is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    out = at(key).get<bool>();
  }
  template <typename Int>
  void get_int(const char* key, Int& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (v.is_number_integer() || v.is_number_unsigned()) {
      if (v.is_number_unsigned()) {
        out = static_cast<Int>(v.get<std::uint64_t>());
      } else {
        const auto x = v.get<std::int64_t>();
        if (x < 0 && std::is_unsigned_v<Int>) {
          throw ConfigError(path(key) + ": must be >= 0");
        }
        out = static_cast<Int>(x);
      }
      return;
    }
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::floor(x) == x && std::abs(x) < 9e15) {
        out = static_cast<Int>(x);
        return;
      }
    }
    throw ConfigError(path(key) + ": expected an integer");
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(path(it.key().c_str()) + ": unknown field");
      }
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

void parse_env(const json& value, EnvSpec& env) {
  if (value.is_string()) {
    env.kind = value.get<std::string>();
  } else {
    Fields f(value, "env");
    f.get("kind", env.kind);
    f.get_int("grid", env.grid);
    if (f.has("discount")) {
      double d = 0.0;
      f.get("discount", d);
      env.discount = d;
    }
    f.get("network", env.network);
    f.get_int("states", env.toy_states);
    f.get_int("actions", env.toy_actions);
    f.get_int("seed", env.toy_seed);
    f.get("epsilon", env.toy_epsilon);
    f.get_int("latent_rank", env.toy_latent_rank);
    f.finish();
  }
  default_inverse_temperature(env.kind);  // validates the kind
}

void parse_basis(const json& value, BasisSpec& basis) {
  if (value.is_string()) {
    basis.kind = value.get<std::string>();
  } else {
    Fields f(value, "basis");
    f.get("kind", basis.kind);
    f.get_int("d2", basis.d2);
    f.get("c", basis.c);
    f.get("v", basis.v);
    f.finish();
  }
  if (basis.kind != "one-hot" && basis.kind != "coarse-one-hot" &&
      basis.kind != "tan-normal") {
    throw ConfigError("basis.kind: unknown value '" + basis.kind + "'");
  }
}

template <typename T>
std::vector<T> int_list(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<T> out;
  for (const json& x : value) {
    if (!x.is_number_integer() && !x.is_number_unsigned()) {
      throw ConfigError(where + ": expected integers");
    }
    if (x.is_number_integer() && x.get<std::int64_t>() < 0) {
      throw ConfigError(where + ": entries must be >= 0");
    }
    out.push_back(static_cast<T>(x.get<std::uint64_t>()));
  }
  return out;
}

Algorithm resolve_algorithm(const std::string& algo,
                            const std::string& variant) {
  if (algo == "fpi") {
    return fpi_algorithm(variant.empty() ? std::string("vanilla") : variant);
  }
  const Algorithm a = parse_algorithm(algo);
  if (!variant.empty()) {
    if (a == Algorithm::kSemiSgd) {
      throw ConfigError("variant: only applies to fpi algorithms");
    }
    if (a != fpi_algorithm(variant)) {
      throw ConfigError("variant: '" + variant + "' conflicts with algorithm '" +
                        algo + "'");
    }
  }
  return a;
}

}  // namespace

ExperimentSpec parse_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentSpec spec;
  Fields f(doc, "");
  if (f.has("env")) parse_env(f.at("env"), spec.env);
  if (f.has("basis")) parse_basis(f.at("basis"), spec.basis);
  std::string algo = to_string(spec.run.algorithm);
  std::string variant;
  f.get("algorithm", algo);
  f.get("variant", variant);
  spec.run.algorithm = resolve_algorithm(algo, variant);
  f.get_int("steps", spec.run.total_steps);
  double alpha = spec.run.step_size.a0();
  double decay = 0.0;
  f.get("alpha", alpha);
  f.get("decay", decay);
  spec.run.step_size = decay > 0.0 ? StepSizeSchedule::LinearDecay(alpha, decay)
                                   : StepSizeSchedule::Constant(alpha);
  f.get_int("inner_k", spec.run.inner_loop);
  if (f.has("inverse_temperature")) {
    f.get("inverse_temperature", spec.run.inverse_temperature);
    spec.inverse_temperature_set = true;
  }
  f.get("ball_radius", spec.run.ball_radius);
  if (f.has("seeds")) {
    const json& s = f.at("seeds");
    if (s.is_number_integer() || s.is_number_unsigned()) {
      const auto n = s.get<std::int64_t>();
      if (n < 1) throw ConfigError("seeds: count must be >= 1");
      for (std::int64_t k = 1; k <= n; ++k) spec.seeds.push_back(k);
    } else {
      spec.seeds = int_list<std::uint64_t>(s, "seeds");
      if (spec.seeds.empty()) throw ConfigError("seeds: at least one seed");
    }
  }
  f.get_int("seed_offset", spec.seed_offset);
  f.get_int("cadence", spec.cadence);
  f.get_int("exploitability_cadence", spec.exploitability_cadence);
  f.get("exploitability", spec.exploitability);
  if (f.has("reference")) {
    const json& r = f.at("reference");
    if (r.is_string()) {
      spec.reference_path = r.get<std::string>();
    } else {
      Fields rf(r, "reference");
      rf.get("path", spec.reference_path);
      rf.get_int("outer_iters", spec.reference_iters);
      rf.finish();
    }
  }
  if (f.has("k_list")) spec.k_list = int_list<std::int64_t>(f.at("k_list"), "k_list");
  if (f.has("d2_list")) spec.d2_list = int_list<int>(f.at("d2_list"), "d2_list");
  if (f.has("compare")) {
    Fields cf(f.at("compare"), "compare");
    cf.get_int("grid", spec.compare_grid);
    cf.get_int("steps", spec.compare_steps);
    cf.finish();
  }
  f.get("out", spec.out_dir);
  f.get_int("threads", spec.threads);
  f.finish();
  if (spec.cadence < 1) throw ConfigError("cadence: must be >= 1");
  if (spec.exploitability_cadence < 0) {
    throw ConfigError("exploitability_cadence: must be >= 0");
  }
  if (spec.reference_iters < 1) {
    throw ConfigError("reference.outer_iters: must be >= 1");
  }
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  return parse_spec(detail::read_file(path));
}

std::vector<std::uint64_t> effective_seeds(const ExperimentSpec& spec) {
  std::vector<std::uint64_t> seeds = spec.seeds;
  if (seeds.empty()) {
    for (std::uint64_t k = 1; k <= 10; ++k) seeds.push_back(k);
  }
  for (auto& s : seeds) s += spec.seed_offset;
  return seeds;
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec) {
  if (spec.kind == "ring-road") {
    RingRoadParams p;
    p.grid = spec.grid;
    if (spec.discount) p.discount = *spec.discount;
    return std::make_unique<RingRoadEnv>(p);
  }
  if (spec.kind == "flocking") {
    FlockingParams p;
    p.grid = spec.grid;
    if (spec.discount) p.discount = *spec.discount;
    return std::make_unique<FlockingEnv>(p);
  }
  if (spec.kind == "sioux-falls") {
    std::string path = spec.network;
    if (!std::filesystem::exists(path)) {
      const auto fallback = std::filesystem::path(MFG_DATA_DIR) /
                            std::filesystem::path(path).filename();
      if (std::filesystem::exists(fallback)) path = fallback.string();
    }
    RoutingParams p;
    if (spec.discount) p.discount = *spec.discount;
    return std::make_unique<RoutingEnv>(load_network(path), p);
  }
  if (spec.kind == "toy") {
    ToyParams p;
    p.num_states = spec.toy_states;
    p.num_actions = spec.toy_actions;
    p.seed = spec.toy_seed;
    p.epsilon = spec.toy_epsilon;
    p.latent_rank = spec.toy_latent_rank;
    if (spec.discount) p.discount = *spec.discount;
    return std::make_unique<ToyFiniteEnv>(p);
  }
  throw ConfigError("env: unknown kind '" + spec.kind + "'");
}

namespace {

MeasureBasis make_basis(const BasisSpec& spec, const StateSpace& states) {
  if (spec.kind == "one-hot") return one_hot_measure_basis(states);
  if (spec.d2 < 1) throw ConfigError("basis.d2: must be >= 1");
  if (spec.kind == "coarse-one-hot") return coarse_one_hot_basis(states, spec.d2);
  const double v = spec.v > 0.0 ? spec.v : spec.d2 / 2.0;
  return tan_normal_basis(states, spec.d2, spec.c, v);
}

RunConfig resolved_config(const ExperimentSpec& spec) {
  RunConfig cfg = spec.run;
  if (!spec.inverse_temperature_set) {
    cfg.inverse_temperature = default_inverse_temperature(spec.env.kind);
  }
  return cfg;
}

Vector load_population(const std::string& path) {
  std::istringstream in(detail::read_file(path));
  Vector mu;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      mu.push_back(std::stod(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) {
        throw std::invalid_argument("trailing text");
      }
    } catch (const std::exception&) {
      throw ConfigError("reference: line " + std::to_string(line_no) +
                        " of '" + path + "' is not a number");
    }
  }
  if (!on_simplex(mu, 1e-9)) {
    throw ConfigError("reference: '" + path + "' is not a probability vector");
  }
  return mu;
}

struct Moments {
  std::optional<double> mean;
  std::optional<double> std;
};

// Mean and sample standard deviation; nullopt when no value is present.
Moments moments(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  int n = 0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  Moments m;
  if (n == 0) return m;
  const double mean = sum / n;
  double sq = 0.0;
  for (const auto& x : xs) {
    if (x) sq += (*x - mean) * (*x - mean);
  }
  m.mean = mean;
  m.std = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  return m;
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

Vector reference_population(const ExperimentSpec& spec,
                            const Environment& env) {
  if (!spec.reference_path.empty()) {
    Vector mu = load_population(spec.reference_path);
    if (static_cast<int>(mu.size()) != env.num_states()) {
      throw ConfigError("reference: '" + spec.reference_path + "' has " +
                        std::to_string(mu.size()) + " entries, expected " +
                        std::to_string(env.num_states()));
    }
    return mu;
  }
  return model_based_fpi_fp(env, spec.reference_iters, 0, kValueTolerance,
                            /*trace=*/false)
      .mu_star;
}

std::vector<RunRecord> run_seeds(const ExperimentSpec& spec,
                                 const Environment& env,
                                 const Vector& reference_mu) {
  const std::vector<std::uint64_t> seeds = effective_seeds(spec);
  const FeatureMap phi = one_hot_feature_map(env.states(), env.actions());
  const MeasureBasis basis = make_basis(spec.basis, env.states());
  RunConfig base = resolved_config(spec);
  validate_config(base);
  MetricsSpec metrics;
  metrics.cadence = spec.cadence;
  metrics.exploitability_cadence =
      spec.exploitability ? spec.exploitability_cadence : 0;
  metrics.reference_mu = &reference_mu;

  std::vector<RunRecord> records(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        RunConfig cfg = base;
        cfg.seed = seeds[i];
        records[i] = run_learner(env, cfg, phi, basis, metrics);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                      : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1,
                                 static_cast<unsigned>(seeds.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

void cmd_reference(const ExperimentSpec& spec) {
  const auto env = make_environment(spec.env);
  const ReferenceSolution ref = model_based_fpi_fp(*env, spec.reference_iters);
  detail::CsvTable table({"section", "i", "j", "value"});
  using detail::format_number;
  for (int s = 0; s < env->num_states(); ++s) {
    table.add_row({"mu", std::to_string(s), "0", format_number(ref.mu_star[s])});
  }
  for (int s = 0; s < env->num_states(); ++s) {
    for (int a : env->actions().feasible(s)) {
      table.add_row({"q", std::to_string(s), std::to_string(a),
                     format_number(ref.q_star[static_cast<std::size_t>(s) *
                                                  env->num_actions() +
                                              a])});
    }
  }
  for (std::size_t k = 0; k < ref.exploitability_trace.size(); ++k) {
    table.add_row({"exploitability", std::to_string(k), "0",
                   format_number(ref.exploitability_trace[k])});
  }
  detail::write_file(join_path(spec.out_dir, "reference.csv"), table.str());
  std::string dump;
  for (double x : ref.mu_star) dump += format_number(x) + "\n";
  detail::write_file(join_path(spec.out_dir, "mu_star.txt"), dump);
}

void cmd_run(const ExperimentSpec& spec) {
  const auto env = make_environment(spec.env);
  const Vector reference = reference_population(spec, *env);
  const std::vector<RunRecord> records = run_seeds(spec, *env, reference);
  for (const RunRecord& rec : records) {
    detail::CsvTable table({"step", "mse", "exploitability"});
    for (const MetricSnapshot& snap : rec.snapshots) {
      table.add_row({std::to_string(snap.step), detail::format_cell(snap.mse),
                     detail::format_cell(snap.exploitability)});
    }
    detail::write_file(
        join_path(spec.out_dir, "run_seed" + std::to_string(rec.seed) + ".csv"),
        table.str());
  }
  detail::CsvTable agg({"step", "mse_mean", "mse_std", "expl_mean", "expl_std"});
  const std::size_t rows = records.front().snapshots.size();
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::optional<double>> m;
    std::vector<std::optional<double>> e;
    for (const RunRecord& rec : records) {
      m.push_back(rec.snapshots[i].mse);
      e.push_back(rec.snapshots[i].exploitability);
    }
    const Moments mm = moments(m);
    const Moments em = moments(e);
    agg.add_row({std::to_string(records.front().snapshots[i].step),
                 detail::format_cell(mm.mean), detail::format_cell(mm.std),
                 detail::format_cell(em.mean), detail::format_cell(em.std)});
  }
  detail::write_file(join_path(spec.out_dir, "aggregate.csv"), agg.str());
}

void cmd_sweep_k(const ExperimentSpec& spec) {
  if (spec.k_list.empty()) throw ConfigError("k_list: must not be empty");
  const auto env = make_environment(spec.env);
  const Vector reference = reference_population(spec, *env);
  detail::CsvTable table({"k", "mse_mean", "mse_std", "expl_mean", "expl_std"});
  for (std::int64_t k : spec.k_list) {
    if (k < 1) throw ConfigError("k_list: entries must be >= 1");
    ExperimentSpec run = spec;
    if (run.run.algorithm == Algorithm::kSemiSgd) {
      run.run.algorithm = Algorithm::kFpiVanilla;
    }
    run.run.inner_loop = k;
    const std::vector<RunRecord> records = run_seeds(run, *env, reference);
    std::vector<std::optional<double>> m;
    std::vector<std::optional<double>> e;
    for (const RunRecord& rec : records) {
      m.push_back(rec.snapshots.back().mse);
      e.push_back(rec.snapshots.back().exploitability);
    }
    const Moments mm = moments(m);
    const Moments em = moments(e);
    table.add_row({std::to_string(k), detail::format_cell(mm.mean),
                   detail::format_cell(mm.std), detail::format_cell(em.mean),
                   detail::format_cell(em.std)});
  }
  detail::write_file(join_path(spec.out_dir, "sweep_k.csv"), table.str());
}

void cmd_compare_lfa(const ExperimentSpec& spec) {
  if (spec.d2_list.empty()) throw ConfigError("d2_list: must not be empty");
  if (spec.env.kind != "ring-road" && spec.env.kind != "flocking") {
    throw ConfigError("compare-lfa: env must be ring-road or flocking");
  }
  ExperimentSpec base = spec;
  base.env.grid = spec.compare_grid;
  base.run.total_steps = spec.compare_steps;
  base.run.algorithm = Algorithm::kSemiSgd;
  base.exploitability = false;
  base.cadence = std::max<std::int64_t>(spec.compare_steps, 1);
  const auto env = make_environment(base.env);
  const Vector reference = reference_population(base, *env);
  detail::CsvTable table({"d2", "method", "mse_mean", "mse_std"});
  for (int d2 : spec.d2_list) {
    if (d2 < 1 || d2 > env->num_states()) {
      throw ConfigError("d2_list: entries must lie in [1, grid]");
    }
    for (const char* method : {"discretization", "pa-lfa"}) {
      ExperimentSpec run = base;
      run.basis.kind = std::string(method) == "pa-lfa" ? "tan-normal"
                                                       : "coarse-one-hot";
      run.basis.d2 = d2;
      run.basis.c = spec.basis.kind == "tan-normal" ? spec.basis.c : 1.2;
      run.basis.v = spec.basis.kind == "tan-normal" ? spec.basis.v : 0.0;
      const std::vector<RunRecord> records = run_seeds(run, *env, reference);
      std::vector<std::optional<double>> m;
      for (const RunRecord& rec : records) m.push_back(rec.snapshots.back().mse);
      const Moments mm = moments(m);
      table.add_row({std::to_string(d2), method, detail::format_cell(mm.mean),
                     detail::format_cell(mm.std)});
    }
  }
  detail::write_file(join_path(spec.out_dir, "compare_lfa.csv"), table.str());
}

}  // namespace mfg
