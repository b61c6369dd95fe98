// Exact model-based quantities on finite environments: populations induced
// by a policy, value iteration, policy evaluation, exploitability, the
// mean-path semi-gradient and error measures against a reference.

#ifndef MFG_METRICS_H_
#define MFG_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>

#include "mfg/core.h"
#include "mfg/envs.h"
#include "mfg/lfa.h"
#include "mfg/policy.h"

namespace mfg {

inline constexpr double kValueTolerance = 1e-10;
inline constexpr double kPopulationTolerance = 1e-12;
inline constexpr std::int64_t kMaxPopulationSweeps = 1000000;

struct MetricSnapshot {
  std::int64_t step = 0;
  std::optional<double> mse;
  std::optional<double> exploitability;
  // ||xi_t - xi_ref||_2 when a reference parameter is supplied.
  std::optional<double> param_norm_gap;

  friend bool operator==(const MetricSnapshot&, const MetricSnapshot&) =
      default;
};

// sum_s (m(s) - ref(s))^2. Throws ConfigError on a length mismatch.
double mse(std::span<const double> m, std::span<const double> ref);

// Moves cell masses from a uniform grid of masses.size() cells onto a
// uniform grid of `target_size` cells over the same interval, splitting
// each source cell in proportion to its overlap with the target cells.
Vector resample_masses(std::span<const double> masses, int target_size);

// Stationary distribution of the chain with kernel frozen at `mu`:
// d(s') = sum_{s,a} d(s) pi(a|s) P(s'|s,a,mu). Reducible chains return the
// long-run distribution of the lazy chain started from uniform.
Vector stationary_distribution(const Policy& pi, const Environment& env,
                               std::span<const double> mu);

// Fixed point of M <- sum_{s,a} M(s) pi(a|s) P(.|s,a,M), started from
// uniform. Throws NumericError when it fails to converge.
Vector induced_population(const Policy& pi, const Environment& env);

// One application of the transition operator above.
Vector transition_operator(const Policy& pi, const Environment& env,
                           std::span<const double> m);

struct ValueIterationResult {
  Vector v;        // |S|
  Vector q;        // |S| x |A| row-major; -inf at infeasible actions
  Policy greedy;   // argmax of q, lowest index on ties
  int iterations = 0;
};

// max_iters = ceil(log(tol (1 - gamma) / R) / log gamma) + 10.
int default_max_iterations(double discount, double reward_bound, double tol);

// Bellman-optimality iteration for the MDP frozen at `mu` until the
// sup-norm change drops below `tol`. `warm_start` seeds V. Throws
// NumericError with the last residual when max_iters is exceeded.
ValueIterationResult value_iteration(const Environment& env,
                                     std::span<const double> mu, double tol,
                                     int max_iters,
                                     const Vector* warm_start = nullptr);
ValueIterationResult value_iteration(const Environment& env,
                                     std::span<const double> mu,
                                     double tol = kValueTolerance);

// Value of `pi` in the MDP frozen at `mu`.
Vector policy_evaluation(const Environment& env, const Policy& pi,
                         std::span<const double> mu, double tol,
                         int max_iters);
Vector policy_evaluation(const Environment& env, const Policy& pi,
                         std::span<const double> mu,
                         double tol = kValueTolerance);

// E_{s ~ mu_pi}[V_BR(s) - V_pi(s)] with mu_pi the induced population of pi.
double exploitability(const Policy& pi, const Environment& env,
                      double tol = kValueTolerance);
// Same gap evaluated against a given population instead of the induced one.
double exploitability_at(const Policy& pi, const Environment& env,
                         std::span<const double> mu,
                         double tol = kValueTolerance);

struct SemiGradient {
  Vector theta;
  Vector eta;

  double norm() const;
};

// Exact expectation of both semi-gradients under the stationary law of
// (s, a, s', a') for the policy op(<phi, theta>) and the kernel frozen at
// the represented measure <psi, eta>.
SemiGradient mean_path_semigradient(const UnifiedParameter& xi,
                                    const Environment& env,
                                    const FeatureMap& phi,
                                    const MeasureBasis& basis,
                                    const PolicyOperator& op);

// ||mu - proj(mu)||_2 with proj the Euclidean projection onto the span of
// the basis measures on the grid.
double span_residual(std::span<const double> mu, const MeasureBasis& basis);

}  // namespace mfg

#endif  // MFG_METRICS_H_
