// Experiment orchestration: JSON experiment specs, seed fan-out and the CSV
// outputs of the four subcommands.

#ifndef MFG_EXPERIMENT_H_
#define MFG_EXPERIMENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfg/core.h"
#include "mfg/envs.h"
#include "mfg/learners.h"

namespace mfg {

struct EnvSpec {
  std::string kind = "ring-road";  // ring-road, flocking, sioux-falls, toy
  int grid = 50;
  std::optional<double> discount;  // overrides the environment default
  std::string network = "data/sioux_falls.net";
  int toy_states = 3;
  int toy_actions = 2;
  std::uint64_t toy_seed = 7;
  double toy_epsilon = 0.1;
  int toy_latent_rank = 0;
};

struct BasisSpec {
  std::string kind = "one-hot";  // one-hot, coarse-one-hot, tan-normal
  int d2 = 0;
  double c = 1.2;
  double v = 0.0;  // 0 selects d2 / 2
};

struct ExperimentSpec {
  EnvSpec env;
  BasisSpec basis;
  RunConfig run;
  // Set when the spec or a flag fixes the inverse temperature; otherwise
  // the environment default applies.
  bool inverse_temperature_set = false;
  std::vector<std::uint64_t> seeds;  // empty selects 1..10
  std::uint64_t seed_offset = 0;
  std::int64_t cadence = 100;
  std::int64_t exploitability_cadence = 5000;
  bool exploitability = true;
  std::string reference_path;  // cached mu_star, one value per line
  int reference_iters = 300;
  std::vector<std::int64_t> k_list = {1, 10, 100, 500};
  std::vector<int> d2_list = {5, 20};
  int compare_grid = 200;
  std::int64_t compare_steps = 10000;
  std::string out_dir = "out";
  int threads = 0;  // 0 selects the hardware concurrency
};

// Inverse temperatures used by default: 1e9 ring road, 1e6 flocking,
// 1e3 routing, 1e9 toy.
double default_inverse_temperature(const std::string& env_kind);

// fpi-<variant> for vanilla, fp, md or er.
Algorithm fpi_algorithm(const std::string& variant);

// Parses a JSON document; throws ConfigError naming the offending field.
ExperimentSpec parse_spec(const std::string& json_text);
// Reads and parses a spec file; throws IoError when it cannot be read.
ExperimentSpec load_spec(const std::string& path);

// Seeds after applying the default and the offset.
std::vector<std::uint64_t> effective_seeds(const ExperimentSpec& spec);

std::unique_ptr<Environment> make_environment(const EnvSpec& spec);

// Reference population for the spec's environment, loaded from
// spec.reference_path when set and solved otherwise.
Vector reference_population(const ExperimentSpec& spec,
                            const Environment& env);

// One learner run per seed, in seed order.
std::vector<RunRecord> run_seeds(const ExperimentSpec& spec,
                                 const Environment& env,
                                 const Vector& reference_mu);

// reference.csv (section,i,j,value) and mu_star.txt.
void cmd_reference(const ExperimentSpec& spec);
// run_seed<k>.csv per seed and aggregate.csv.
void cmd_run(const ExperimentSpec& spec);
// sweep_k.csv with one row per K.
void cmd_sweep_k(const ExperimentSpec& spec);
// compare_lfa.csv with one row per (d2, method).
void cmd_compare_lfa(const ExperimentSpec& spec);

}  // namespace mfg

#endif  // MFG_EXPERIMENT_H_
