// Online learners for mean field equilibria: single-loop SemiSGD, the
// online fixed-point iteration family, and the model-based reference
// solver (fixed-point iteration with fictitious play).

#ifndef MFG_LEARNERS_H_
#define MFG_LEARNERS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfg/core.h"
#include "mfg/envs.h"
#include "mfg/lfa.h"
#include "mfg/metrics.h"
#include "mfg/policy.h"

namespace mfg {

// Softmax inverse temperature of the entropy-regularized variant, relative
// to the base operator.
inline constexpr double kEntropyTemperatureScale = 1e-5;

enum class FpiVariant { kVanilla, kFp, kMd, kEr };

std::string to_string(FpiVariant variant);
FpiVariant parse_variant(const std::string& name);
// Variant of an FPI algorithm; throws ConfigError for kSemiSgd.
FpiVariant fpi_variant(Algorithm algorithm);

struct RunOptions {
  // Disabling both recovers the raw tabular recursion.
  bool project_theta = true;
  bool project_eta = true;
};

struct MetricsSpec {
  // Snapshot every `cadence` steps and at T.
  std::int64_t cadence = 100;
  // Exploitability every this many steps and at T; 0 disables it.
  std::int64_t exploitability_cadence = 5000;
  // Reference population on any uniform grid; the learner's population is
  // resampled onto it. Null skips the MSE.
  const Vector* reference_mu = nullptr;
  // Reference parameter for the parameter gap. Null skips it.
  const UnifiedParameter* reference_xi = nullptr;
};

struct LearnerState {
  UnifiedParameter xi;
  int s = 0;  // s_t
  int a = 0;  // a_t, drawn before the step that uses it
  std::int64_t t = 0;
  Rng rng{0};
  double theta_sq_norm = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<MetricSnapshot> snapshots;
  UnifiedParameter final_parameter;
  // The population measure the learner reports at T, on the env grid.
  Vector final_population;
};

// Called once after initialization and after every step.
using StepObserver = std::function<void(const LearnerState&)>;

// The objects a learner reads; all shared read-only across runs.
struct LearningProblem {
  const Environment& env;
  const FeatureMap& phi;
  const MeasureBasis& basis;
  PolicyOperator policy;
  double ball_radius;
  RunOptions options;
};

// sqrt(d1) R / (1 - gamma).
double default_ball_radius(const Environment& env, const FeatureMap& phi);

// Builds the problem, resolving a zero ball radius to the default and
// checking shapes.
LearningProblem make_problem(const Environment& env, const FeatureMap& phi,
                             const MeasureBasis& basis,
                             const PolicyOperator& policy,
                             const RunConfig& config,
                             const RunOptions& options = {});

// theta = 0, eta = project_simplex(U(0, 1)^d2), s_0 uniform, a_0 drawn from
// the policy at Q = 0, all from a fresh stream seeded with config.seed.
LearnerState init_learner(const LearningProblem& problem,
                          const RunConfig& config);

// One SemiSGD update from a single transition, in place. The reward and
// kernel see the measure represented by eta_t; a_{t+1} is drawn from the
// policy at Q_t; theta and eta then move with the same step size.
void semisgd_step(LearnerState& state, const LearningProblem& problem,
                  double alpha);

RunRecord run_semisgd(const Environment& env, const RunConfig& config,
                      const FeatureMap& phi, const MeasureBasis& basis,
                      const PolicyOperator& policy,
                      const MetricsSpec& metrics = {},
                      const RunOptions& options = {},
                      const StepObserver& observer = {});

// T / K outer loops of K samples. Within a loop the behavior policy is
// frozen at the loop-start Q (or the mixed Q for MD) and the environment
// sees the loop-start population (or the mixed population for FP); theta
// follows TD and eta follows Monte Carlo averaging from the same samples.
// A trailing partial loop handles T not divisible by K.
RunRecord run_online_fpi(const Environment& env, const RunConfig& config,
                         FpiVariant variant, const FeatureMap& phi,
                         const MeasureBasis& basis,
                         const PolicyOperator& policy,
                         const MetricsSpec& metrics = {},
                         const RunOptions& options = {},
                         const StepObserver& observer = {});

// Dispatches on config.algorithm with a softmax operator at
// config.inverse_temperature.
RunRecord run_learner(const Environment& env, const RunConfig& config,
                      const FeatureMap& phi, const MeasureBasis& basis,
                      const MetricsSpec& metrics = {},
                      const RunOptions& options = {});

// (1 - alpha) hist + alpha fresh, renormalized. alpha in [0, 1].
Vector mix_population(std::span<const double> hist,
                      std::span<const double> fresh, double alpha);
// hist + alpha fresh.
Vector mix_q(std::span<const double> hist, std::span<const double> fresh,
             double alpha);

struct ReferenceSolution {
  Vector q_star;   // |S| x |A| row-major, optimal Q at mu_star
  Vector mu_star;  // population over |S|
  Policy pi_star;  // equilibrium policy (averaged unless exact)
  int iterations = 0;
  double final_exploitability = 0.0;
  // Exploitability of the equilibrium policy after each outer iteration.
  Vector exploitability_trace;
  // True when a pure policy was found that best-responds to its own
  // induced population.
  bool exact = false;
};

// Model-based fixed-point iteration with fictitious play. Each outer
// iteration computes the greedy policy at the averaged population, its
// induced population, and folds that into the running average; the
// averaged policy weights each greedy policy by its own population. Stops
// early when the greedy policy is a best response to its own population.
// vi_iters <= 0 selects twice the contraction bound. Without `trace` only
// the final exploitability is evaluated.
ReferenceSolution model_based_fpi_fp(const Environment& env, int outer_iters,
                                     int vi_iters = 0,
                                     double vi_tol = kValueTolerance,
                                     bool trace = true);

}  // namespace mfg

#endif  // MFG_LEARNERS_H_
