// mfg_sim: reference solutions, learner runs, inner-loop sweeps and the
// LFA comparison, each written as CSV under --out.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfg/experiment.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> env;
  std::optional<std::string> algo;
  std::optional<std::string> variant;
  std::optional<std::int64_t> steps;
  std::optional<double> alpha;
  std::optional<std::int64_t> inner_k;
  std::optional<std::string> seeds;
  std::optional<std::int64_t> cadence;
  std::optional<std::uint64_t> seed_offset;
  std::optional<std::string> reference;
  std::optional<std::string> k_list;
  std::optional<std::string> d2_list;
  std::optional<int> threads;
  bool no_exploitability = false;
};

void add_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment spec");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--env", o.env, "ring-road, flocking, sioux-falls or toy");
  cmd->add_option("--algo", o.algo, "semisgd, fpi or fpi-<variant>");
  cmd->add_option("--variant", o.variant, "vanilla, fp, md or er");
  cmd->add_option("--steps", o.steps, "total samples T");
  cmd->add_option("--alpha", o.alpha, "constant step size");
  cmd->add_option("--inner-k", o.inner_k, "FPI inner loop length K");
  cmd->add_option("--seeds", o.seeds, "seed count N (1..N) or a comma list");
  cmd->add_option("--cadence", o.cadence, "snapshot every this many steps");
  cmd->add_option("--seed-offset", o.seed_offset, "added to every seed");
  cmd->add_option("--reference", o.reference, "cached mu_star.txt");
  cmd->add_option("--k-list", o.k_list, "comma list of K for sweep-k");
  cmd->add_option("--d2-list", o.d2_list, "comma list of d2 for compare-lfa");
  cmd->add_option("--threads", o.threads, "worker threads for seeds");
  cmd->add_flag("--no-exploitability", o.no_exploitability,
                "skip exploitability snapshots");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw mfg::ConfigError(std::string(flag) + ": '" + item +
                             "' is not a non-negative integer");
    }
  }
  if (out.empty()) throw mfg::ConfigError(std::string(flag) + ": empty list");
  return out;
}

mfg::ExperimentSpec build_spec(const Overrides& o) {
  mfg::ExperimentSpec spec =
      o.config.empty() ? mfg::ExperimentSpec{} : mfg::load_spec(o.config);
  if (o.out) spec.out_dir = *o.out;
  if (o.env) {
    mfg::default_inverse_temperature(*o.env);
    spec.env.kind = *o.env;
  }
  if (o.algo || o.variant) {
    std::string algo = o.algo.value_or(mfg::to_string(spec.run.algorithm));
    if (o.variant && algo.rfind("fpi", 0) == 0) algo = "fpi";
    if (algo == "fpi") {
      spec.run.algorithm = mfg::fpi_algorithm(o.variant.value_or("vanilla"));
    } else {
      if (o.variant) {
        throw mfg::ConfigError("--variant: only applies to fpi algorithms");
      }
      spec.run.algorithm = mfg::parse_algorithm(algo);
    }
  }
  if (o.steps) spec.run.total_steps = *o.steps;
  if (o.alpha) spec.run.step_size = mfg::StepSizeSchedule::Constant(*o.alpha);
  if (o.inner_k) spec.run.inner_loop = *o.inner_k;
  if (o.seeds) {
    if (o.seeds->find(',') == std::string::npos) {
      const auto n = parse_list<std::uint64_t>(*o.seeds, "--seeds").front();
      if (n < 1) throw mfg::ConfigError("--seeds: count must be >= 1");
      spec.seeds.clear();
      for (std::uint64_t k = 1; k <= n; ++k) spec.seeds.push_back(k);
    } else {
      spec.seeds = parse_list<std::uint64_t>(*o.seeds, "--seeds");
    }
  }
  if (o.cadence) {
    if (*o.cadence < 1) throw mfg::ConfigError("--cadence: must be >= 1");
    spec.cadence = *o.cadence;
  }
  if (o.seed_offset) spec.seed_offset = *o.seed_offset;
  if (o.reference) spec.reference_path = *o.reference;
  if (o.k_list) spec.k_list = parse_list<std::int64_t>(*o.k_list, "--k-list");
  if (o.d2_list) spec.d2_list = parse_list<int>(*o.d2_list, "--d2-list");
  if (o.threads) spec.threads = *o.threads;
  if (o.no_exploitability) spec.exploitability = false;
  mfg::validate_config(spec.run);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean field game learners: SemiSGD and online FPI"};
  app.require_subcommand(1);
  Overrides o;
  CLI::App* reference = app.add_subcommand("reference", "solve for the reference equilibrium");
  CLI::App* run = app.add_subcommand("run", "run a learner over seeds");
  CLI::App* sweep = app.add_subcommand("sweep-k", "FPI inner-loop sweep");
  CLI::App* compare = app.add_subcommand("compare-lfa", "PA-LFA against discretization");
  for (CLI::App* cmd : {reference, run, sweep, compare}) add_options(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const mfg::ExperimentSpec spec = build_spec(o);
    if (reference->parsed()) mfg::cmd_reference(spec);
    if (run->parsed()) mfg::cmd_run(spec);
    if (sweep->parsed()) mfg::cmd_sweep_k(spec);
    if (compare->parsed()) mfg::cmd_compare_lfa(spec);
  } catch (const mfg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mfg::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const mfg::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
