// Acceptance checks, one PASS/FAIL line each. Exit status is nonzero when
// any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/experiment.h"
#include "mfg/learners.h"
#include "mfg/metrics.h"
#include "oracles.h"

namespace {

using namespace mfg;
namespace fs = std::filesystem;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Parses "key,v1,v2,..." rows of a CSV into columns by header name.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit Csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::istringstream cs(line);
      std::string cell;
      while (std::getline(cs, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.emplace_back();
      if (first) header = cells; else rows.push_back(cells);
      first = false;
    }
  }
  double at(std::size_t r, const std::string& col) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == col) return std::stod(rows[r][c]);
    }
    throw std::runtime_error("missing column " + col);
  }
};

Vector uniform_vector(Rng& rng, int d, double lo, double hi) {
  Vector v(d);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

Outcome simplex_oracle() {
  Rng rng(101);
  double worst = 0.0;
  for (int d = 1; d <= 5; ++d) {
    for (int k = 0; k < 200; ++k) {
      const Vector v = uniform_vector(rng, d, -2.0, 2.0);
      const Vector p = project_simplex(v);
      const Vector ref = oracle::simplex_kkt(v);
      for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(p[i] - ref[i]));
    }
  }
  return {worst <= 1e-9, fmt("max linf gap %.3g", worst)};
}

Outcome tabular_identity() {
  const auto S = StateSpace::IntervalGrid(50, true);
  const auto basis = one_hot_measure_basis(S);
  bool ok = basis.gram() == Matrix::Identity(50);
  Rng rng(102);
  int mismatches = 0;
  for (int k = 0; k < 100; ++k) {
    const Vector m = project_simplex(uniform_vector(rng, 50, 0.0, 1.0));
    const int s = rng.uniform_int(50);
    Vector expect = m;
    expect[s] -= 1.0;
    if (semi_gradient_eta(m, s, basis) != expect) ++mismatches;
  }
  ok = ok && mismatches == 0;
  return {ok, "gram identity " + std::string(basis.gram() == Matrix::Identity(50) ? "exact" : "inexact") +
                  ", " + std::to_string(mismatches) + " gradient mismatches"};
}

Outcome implicit_regularization() {
  const ToyFiniteEnv env = toy_finite_env(3, 2, 7);
  const auto phi = one_hot_feature_map(env.states(), env.actions());
  const auto basis = one_hot_measure_basis(env.states());
  const double bound = env.reward_bound() / (1.0 - env.discount());
  double worst_drift = 0.0;
  double worst_q = 0.0;
  bool negative = false;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig c;
    c.total_steps = 10000;
    c.step_size = StepSizeSchedule::Constant(0.1);
    c.seed = seed;
    run_semisgd(env, c, phi, basis, PolicyOperator::Softmax(1e9), {},
                RunOptions{false, false}, [&](const LearnerState& st) {
                  double sum = 0.0;
                  for (double x : st.xi.eta) {
                    negative = negative || x < 0.0;
                    sum += x;
                  }
                  worst_drift = std::max(worst_drift, std::abs(sum - 1.0));
                  for (double x : st.xi.theta) worst_q = std::max(worst_q, std::abs(x));
                });
  }
  const bool ok = !negative && worst_drift <= 1e-12 && worst_q <= bound;
  return {ok, fmt("max simplex drift %.3g", worst_drift) + fmt(", max |Q| %.4g", worst_q) +
                  fmt(" vs R/(1-gamma) %.4g", bound) + (negative ? ", negative mass" : "")};
}

Outcome k1_equivalence() {
  const ToyFiniteEnv env = toy_finite_env(3, 2, 7);
  const auto phi = one_hot_feature_map(env.states(), env.actions());
  const auto basis = one_hot_measure_basis(env.states());
  const auto op = PolicyOperator::Softmax(1e9);
  int differing = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    RunConfig c;
    c.total_steps = 1000;
    c.step_size = StepSizeSchedule::Constant(1e-2);
    c.seed = seed;
    c.inner_loop = 1;
    std::vector<LearnerState> a, b;
    run_semisgd(env, c, phi, basis, op, {}, {}, [&](const LearnerState& s) { a.push_back(s); });
    run_online_fpi(env, c, FpiVariant::kVanilla, phi, basis, op, {}, {},
                   [&](const LearnerState& s) { b.push_back(s); });
    if (a.size() != b.size()) {
      ++differing;
      continue;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!(a[k].xi == b[k].xi) || a[k].s != b[k].s || a[k].a != b[k].a) {
        ++differing;
        break;
      }
    }
  }
  return {differing == 0, std::to_string(differing) + " of 3 seeds differ"};
}

Outcome stationary_point() {
  const ToyFiniteEnv env = toy_finite_env(3, 2, 7);
  const auto phi = one_hot_feature_map(env.states(), env.actions());
  const auto basis = one_hot_measure_basis(env.states());
  const auto op = PolicyOperator::Argmax();
  const auto ref = model_based_fpi_fp(env, 300);
  const UnifiedParameter xi{ref.q_star, ref.mu_star};
  const double at_ref = mean_path_semigradient(xi, env, phi, basis, op).norm();
  double smallest = 1e300;
  int weak = 0;
  std::string per;
  for (std::size_t i = 0; i < xi.theta.size(); ++i) {
    UnifiedParameter bumped = xi;
    bumped.theta[i] += 0.1;
    const double g = mean_path_semigradient(bumped, env, phi, basis, op).norm();
    smallest = std::min(smallest, g);
    if (g < 1e-3) ++weak;
    per += fmt(i == 0 ? "%.3g" : " %.3g", g);
  }
  return {at_ref <= 1e-6 && weak == 0,
          fmt("norm at solution %.3g", at_ref) + "; perturbed norms [" + per + "], " +
              std::to_string(weak) + " below 1e-3"};
}

Outcome representability() {
  ToyParams p;
  p.num_states = 6;
  p.num_actions = 3;
  p.latent_rank = 2;
  p.epsilon = 0.1;
  const ToyFiniteEnv env(p);
  const auto basis = MeasureBasis::FromMasses(env.latent_measures(), 1.0);
  Rng rng(106);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    Policy pi(6, 3);
    for (int s = 0; s < 6; ++s) {
      double sum = 0.0;
      for (int a = 0; a < 3; ++a) sum += (pi(s, a) = rng.uniform());
      for (int a = 0; a < 3; ++a) pi(s, a) /= sum;
    }
    worst = std::max(worst, span_residual(induced_population(pi, env), basis));
  }
  return {worst <= 1e-8, fmt("max residual %.3g over 10 policies", worst)};
}

std::vector<RunRecord> ring_runs(const ExperimentSpec& spec, const Vector& ref) {
  const auto env = make_environment(spec.env);
  return run_seeds(spec, *env, ref);
}

double mean_mse_at(const std::vector<RunRecord>& records, std::int64_t step) {
  double sum = 0.0;
  for (const auto& r : records) {
    for (const auto& s : r.snapshots) {
      if (s.step == step) sum += *s.mse;
    }
  }
  return sum / records.size();
}

ExperimentSpec ring_spec() {
  ExperimentSpec spec;
  spec.env.kind = "ring-road";
  spec.run.total_steps = 100000;
  spec.run.step_size = StepSizeSchedule::Constant(1e-3);
  spec.run.inverse_temperature = 1e9;
  spec.run.inner_loop = 500;
  spec.exploitability = false;
  spec.cadence = 10000;
  return spec;
}

Outcome speed_control_ordering(const Vector& ref) {
  ExperimentSpec spec = ring_spec();
  const auto semi = ring_runs(spec, ref);
  spec.run.algorithm = Algorithm::kFpiVanilla;
  const auto fpi = ring_runs(spec, ref);
  const double semi_t = mean_mse_at(semi, 100000);
  const double semi_t10 = mean_mse_at(semi, 10000);
  const double fpi_t = mean_mse_at(fpi, 100000);
  const bool ordering = semi_t < fpi_t;
  const bool trend = semi_t < semi_t10;
  return {ordering && trend,
          fmt("semisgd %.4g", semi_t) + fmt(" vs fpi-vanilla %.4g", fpi_t) +
              (ordering ? " (ordered)" : " (not ordered)") +
              fmt("; semisgd at T/10 %.4g", semi_t10) +
              (trend ? " (decreasing)" : " (not decreasing)")};
}

Outcome inner_loop_sweep(const Vector& ref) {
  ExperimentSpec spec = ring_spec();
  spec.run.algorithm = Algorithm::kFpiVanilla;
  spec.seeds = {1, 2, 3, 4, 5};
  spec.cadence = 100000;
  std::vector<double> mean, se2;
  std::string detail;
  for (std::int64_t k : {1, 10, 100, 500}) {
    spec.run.inner_loop = k;
    const auto runs = ring_runs(spec, ref);
    double m = 0.0;
    for (const auto& r : runs) m += *r.snapshots.back().mse;
    m /= runs.size();
    double v = 0.0;
    for (const auto& r : runs) v += std::pow(*r.snapshots.back().mse - m, 2);
    v /= runs.size() - 1;
    mean.push_back(m);
    se2.push_back(v / runs.size());
    detail += "K=" + std::to_string(k) + fmt(" %.4g", m) + fmt("+-%.2g; ", std::sqrt(v));
  }
  int violations = 0;
  for (std::size_t i = 0; i + 1 < mean.size(); ++i) {
    if (mean[i] - mean[i + 1] > std::sqrt(se2[i] + se2[i + 1])) ++violations;
  }
  return {violations == 0, detail + std::to_string(violations) + " decreases beyond pooled SE"};
}

Outcome lfa_comparison() {
  ExperimentSpec spec;
  spec.env.kind = "ring-road";
  spec.d2_list = {5, 20};
  fs::path dir = fs::temp_directory_path() / "mfg_acceptance_compare";
  fs::remove_all(dir);
  spec.out_dir = dir.string();
  cmd_compare_lfa(spec);
  const Csv csv(slurp((dir / "compare_lfa.csv").string()));
  fs::remove_all(dir);
  bool ok = true;
  std::string detail;
  for (std::size_t r = 0; r + 1 < csv.rows.size(); r += 2) {
    const double disc = csv.at(r, "mse_mean");
    const double pa = csv.at(r + 1, "mse_mean");
    ok = ok && pa < disc;
    detail += "d2=" + csv.rows[r][0] + fmt(": pa-lfa %.4g", pa) + fmt(" vs discretization %.4g; ", disc);
  }
  return {ok && csv.rows.size() == 4, detail};
}

Outcome exploitability_sanity(const ReferenceSolution& ring) {
  const ToyFiniteEnv toy = toy_finite_env(3, 2, 7);
  const auto t = model_based_fpi_fp(toy, 300);
  const double initial = ring.exploitability_trace.front();
  const bool ok = t.final_exploitability <= 1e-8 &&
                  ring.final_exploitability <= 0.01 * initial;
  return {ok, fmt("toy %.3g", t.final_exploitability) +
                  fmt("; ring road %.3g", ring.final_exploitability) +
                  fmt(" vs initial %.3g", initial)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mfg_acceptance_determinism";
  fs::remove_all(root);
  auto spec_for = [&](const std::string& run) {
    ExperimentSpec s = parse_spec(R"({
      "env": {"kind": "toy", "states": 4, "actions": 3, "seed": 3},
      "steps": 2000, "alpha": 0.02, "seeds": 3, "cadence": 200,
      "exploitability_cadence": 1000, "k_list": [1, 10, 100]
    })");
    s.out_dir = (root / run).string();
    return s;
  };
  auto compare_spec_for = [&](const std::string& run) {
    ExperimentSpec s = parse_spec(R"({
      "env": "ring-road", "seeds": 3, "d2_list": [5, 10],
      "compare": {"grid": 50, "steps": 2000}, "reference": {"outer_iters": 30}
    })");
    s.out_dir = (root / run).string();
    return s;
  };
  for (const char* run : {"a", "b"}) {
    cmd_reference(spec_for(run));
    cmd_run(spec_for(run));
    cmd_sweep_k(spec_for(run));
    cmd_compare_lfa(compare_spec_for(run));
  }
  int files = 0;
  int differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    const auto other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path().string()) != slurp(other.string())) {
      ++differing;
    }
  }
  fs::remove_all(root);
  return {files >= 7 && differing == 0,
          std::to_string(files) + " files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("AC%-2d %s  %s: %s [%.2fs]\n", id, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  report(1, "simplex projection matches KKT oracle", simplex_oracle);
  report(2, "tabular basis identity", tabular_identity);
  report(3, "implicit regularization without projections", implicit_regularization);
  report(4, "online FPI with K=1 equals SemiSGD", k1_equivalence);
  report(5, "stationary-point certificate", stationary_point);
  report(6, "induced populations lie in the basis span", representability);

  const auto ring_env = make_environment(EnvSpec{});
  const ReferenceSolution ring_ref = model_based_fpi_fp(*ring_env, 300);
  report(7, "speed control: SemiSGD beats FPI and converges",
         [&] { return speed_control_ordering(ring_ref.mu_star); });
  report(8, "inner-loop sweep monotone in K", [&] { return inner_loop_sweep(ring_ref.mu_star); });
  report(9, "PA-LFA beats discretization", lfa_comparison);
  report(10, "reference solver exploitability", [&] { return exploitability_sanity(ring_ref); });
  report(11, "byte-identical reruns", determinism);

  std::printf("%d of 11 acceptance checks failed\n", failures);
  return failures == 0 ? 0 : 1;
}
