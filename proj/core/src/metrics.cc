#include "mfg/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "linalg.h"

namespace mfg {

namespace {

double total_variation(std::span<const double> a, std::span<const double> b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

void check_policy_shape(const Policy& pi, const Environment& env) {
  if (pi.num_states != env.num_states() ||
      pi.num_actions != env.num_actions()) {
    throw ConfigError("policy shape does not match the environment");
  }
}

void check_population(std::span<const double> mu, const Environment& env) {
  if (static_cast<int>(mu.size()) != env.num_states()) {
    throw ConfigError("population length does not match |S|");
  }
}

// Dense state-to-state matrix of the chain under pi with kernel frozen at mu.
Matrix chain_matrix(const Policy& pi, const Environment& env,
                    std::span<const double> mu) {
  const int n = env.num_states();
  Matrix p(n, n);
  std::vector<Successor> next;
  for (int s = 0; s < n; ++s) {
    for (int a : env.actions().feasible(s)) {
      const double w = pi(s, a);
      if (w == 0.0) continue;
      env.kernel(s, a, mu, next);
      for (const Successor& x : next) p(s, x.state) += w * x.prob;
    }
  }
  return p;
}

Vector clean_distribution(Vector d) {
  double total = 0.0;
  for (double& x : d) {
    x = std::max(x, 0.0);
    total += x;
  }
  if (!(total > 0.0)) throw NumericError("stationary distribution vanished");
  for (double& x : d) x /= total;
  return d;
}

Vector row_times(std::span<const double> d, const Matrix& p) {
  Vector out(p.cols, 0.0);
  for (int i = 0; i < p.rows; ++i) {
    if (d[i] == 0.0) continue;
    const auto row = p.row(i);
    for (int j = 0; j < p.cols; ++j) out[j] += d[i] * row[j];
  }
  return out;
}

// Long-run distribution of the lazy chain (I + P) / 2 from uniform, by
// repeated squaring.
Vector lazy_limit(const Matrix& p) {
  const int n = p.rows;
  Matrix lazy(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) lazy(i, j) = 0.5 * p(i, j);
    lazy(i, i) += 0.5;
  }
  Vector d(n, 1.0 / n);
  Vector prev = row_times(d, lazy);
  for (int k = 0; k < 64; ++k) {
    lazy = detail::multiply(lazy, lazy);
    Vector cur = row_times(d, lazy);
    const double tv = total_variation(cur, prev);
    prev = std::move(cur);
    if (tv < 1e-15) break;
  }
  return clean_distribution(std::move(prev));
}

struct FrozenMdp {
  int num_states = 0;
  int num_actions = 0;
  // Per (s, feasible a) pair, in state order.
  std::vector<int> pair_state;
  std::vector<int> pair_action;
  Vector pair_reward;
  std::vector<std::size_t> pair_begin;  // into succ_*; size pairs + 1
  std::vector<int> succ_state;
  Vector succ_prob;
  std::vector<std::size_t> state_begin;  // into pairs; size |S| + 1
};

FrozenMdp freeze(const Environment& env, std::span<const double> mu) {
  check_population(mu, env);
  FrozenMdp m;
  m.num_states = env.num_states();
  m.num_actions = env.num_actions();
  std::vector<Successor> next;
  for (int s = 0; s < m.num_states; ++s) {
    m.state_begin.push_back(m.pair_state.size());
    for (int a : env.actions().feasible(s)) {
      m.pair_state.push_back(s);
      m.pair_action.push_back(a);
      m.pair_reward.push_back(env.reward(s, a, mu));
      m.pair_begin.push_back(m.succ_state.size());
      env.kernel(s, a, mu, next);
      for (const Successor& x : next) {
        m.succ_state.push_back(x.state);
        m.succ_prob.push_back(x.prob);
      }
    }
  }
  m.state_begin.push_back(m.pair_state.size());
  m.pair_begin.push_back(m.succ_state.size());
  return m;
}

// r(s, a) + gamma sum_s' P(s'|s,a) v(s') for pair k.
double backup(const FrozenMdp& m, std::size_t k, double gamma,
              std::span<const double> v) {
  double acc = 0.0;
  for (std::size_t j = m.pair_begin[k]; j < m.pair_begin[k + 1]; ++j) {
    acc += m.succ_prob[j] * v[m.succ_state[j]];
  }
  return m.pair_reward[k] + gamma * acc;
}

std::string residual_message(const char* what, int iters, double residual) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%s: no convergence after %d iterations (residual %.3e)", what,
                iters, residual);
  return buf;
}

// Tolerance for the two value solves inside an exploitability evaluation so
// that each value is within tol / 2 of its fixed point.
double inner_tolerance(double tol, double gamma) {
  return tol * (1.0 - gamma) / 2.0;
}

}  // namespace

double mse(std::span<const double> m, std::span<const double> ref) {
  if (m.size() != ref.size()) {
    throw ConfigError("mse: length mismatch (" + std::to_string(m.size()) +
                      " vs " + std::to_string(ref.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = m[i] - ref[i];
    acc += d * d;
  }
  return acc;
}

Vector resample_masses(std::span<const double> masses, int target_size) {
  const long n = static_cast<long>(masses.size());
  const long m = target_size;
  if (n < 1 || m < 1) throw ConfigError("resample_masses: empty grid");
  if (n == m) return Vector(masses.begin(), masses.end());
  // Cell i spans [i m, (i + 1) m) and target cell j spans [j n, (j + 1) n)
  // in units of 1 / (n m).
  Vector out(m, 0.0);
  for (long i = 0; i < n; ++i) {
    const long lo = i * m;
    const long hi = lo + m;
    for (long j = lo / n; j < m && j * n < hi; ++j) {
      const long overlap = std::min(hi, (j + 1) * n) - std::max(lo, j * n);
      if (overlap > 0) {
        out[j] += masses[i] * static_cast<double>(overlap) /
                  static_cast<double>(m);
      }
    }
  }
  return out;
}

Vector transition_operator(const Policy& pi, const Environment& env,
                           std::span<const double> m) {
  check_policy_shape(pi, env);
  check_population(m, env);
  Vector out(env.num_states(), 0.0);
  std::vector<Successor> next;
  for (int s = 0; s < env.num_states(); ++s) {
    if (m[s] == 0.0) continue;
    for (int a : env.actions().feasible(s)) {
      const double w = m[s] * pi(s, a);
      if (w == 0.0) continue;
      env.kernel(s, a, m, next);
      for (const Successor& x : next) out[x.state] += w * x.prob;
    }
  }
  return out;
}

Vector stationary_distribution(const Policy& pi, const Environment& env,
                               std::span<const double> mu) {
  check_policy_shape(pi, env);
  check_population(mu, env);
  const int n = env.num_states();
  const Matrix p = chain_matrix(pi, env, mu);
  // d (I - P) = 0 with the last equation replaced by sum(d) = 1.
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - p(j, i);
  }
  for (int j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  Vector b(n, 0.0);
  b[n - 1] = 1.0;
  if (auto solved = detail::solve_linear(a, b)) {
    Vector d = clean_distribution(std::move(*solved));
    if (total_variation(d, row_times(d, p)) < 1e-10) return d;
  }
  return lazy_limit(p);
}

Vector induced_population(const Policy& pi, const Environment& env) {
  check_policy_shape(pi, env);
  const int n = env.num_states();
  Vector m(n, 1.0 / n);
  if (env.population_independent_kernel()) {
    return stationary_distribution(pi, env, m);
  }
  // Plain sweeps first; damped sweeps if the plain map oscillates.
  constexpr std::int64_t kPlainSweeps = 10000;
  double tv = 0.0;
  for (std::int64_t sweep = 0; sweep < kMaxPopulationSweeps; ++sweep) {
    Vector next = transition_operator(pi, env, m);
    if (sweep >= kPlainSweeps) {
      for (int i = 0; i < n; ++i) next[i] = 0.5 * (next[i] + m[i]);
    }
    tv = total_variation(next, m);
    m = std::move(next);
    if (!std::isfinite(tv)) break;
    if (tv < kPopulationTolerance) return clean_distribution(std::move(m));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "induced_population: no convergence after %lld sweeps "
                "(TV change %.3e)",
                static_cast<long long>(kMaxPopulationSweeps), tv);
  throw NumericError(buf);
}

int default_max_iterations(double discount, double reward_bound, double tol) {
  if (discount <= 0.0) return 11;
  const double ratio = tol * (1.0 - discount) / std::max(reward_bound, 1e-300);
  if (ratio >= 1.0) return 10;
  return static_cast<int>(std::ceil(std::log(ratio) / std::log(discount))) +
         10;
}

ValueIterationResult value_iteration(const Environment& env,
                                     std::span<const double> mu, double tol,
                                     int max_iters, const Vector* warm_start) {
  const FrozenMdp m = freeze(env, mu);
  const double gamma = env.discount();
  const int n = m.num_states;
  Vector v = warm_start ? *warm_start : Vector(n, 0.0);
  if (static_cast<int>(v.size()) != n) {
    throw ConfigError("value_iteration: warm start has the wrong length");
  }
  Vector next(n);
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < max_iters) {
    ++iter;
    residual = 0.0;
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = m.state_begin[s]; k < m.state_begin[s + 1]; ++k) {
        best = std::max(best, backup(m, k, gamma, v));
      }
      next[s] = best;
      residual = std::max(residual, std::abs(best - v[s]));
    }
    v.swap(next);
    if (!std::isfinite(residual)) {
      throw NumericError("value_iteration: non-finite values");
    }
    if (residual < tol) break;
  }
  if (!(residual < tol)) {
    throw NumericError(residual_message("value_iteration", iter, residual));
  }
  ValueIterationResult out;
  out.v = std::move(v);
  out.iterations = iter;
  out.q.assign(static_cast<std::size_t>(n) * m.num_actions,
               -std::numeric_limits<double>::infinity());
  out.greedy = Policy(n, m.num_actions);
  for (int s = 0; s < n; ++s) {
    int best = -1;
    for (std::size_t k = m.state_begin[s]; k < m.state_begin[s + 1]; ++k) {
      const int a = m.pair_action[k];
      const double q = backup(m, k, gamma, out.v);
      out.q[static_cast<std::size_t>(s) * m.num_actions + a] = q;
      if (best < 0 ||
          q > out.q[static_cast<std::size_t>(s) * m.num_actions + best]) {
        best = a;
      }
    }
    out.greedy(s, best) = 1.0;
  }
  return out;
}

ValueIterationResult value_iteration(const Environment& env,
                                     std::span<const double> mu, double tol) {
  return value_iteration(
      env, mu, tol,
      default_max_iterations(env.discount(), env.reward_bound(), tol));
}

Vector policy_evaluation(const Environment& env, const Policy& pi,
                         std::span<const double> mu, double tol,
                         int max_iters) {
  check_policy_shape(pi, env);
  const FrozenMdp m = freeze(env, mu);
  const double gamma = env.discount();
  const int n = m.num_states;
  Vector v(n, 0.0);
  Vector next(n);
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < max_iters) {
    ++iter;
    residual = 0.0;
    for (int s = 0; s < n; ++s) {
      double acc = 0.0;
      for (std::size_t k = m.state_begin[s]; k < m.state_begin[s + 1]; ++k) {
        const double w = pi(s, m.pair_action[k]);
        if (w == 0.0) continue;
        acc += w * backup(m, k, gamma, v);
      }
      next[s] = acc;
      residual = std::max(residual, std::abs(acc - v[s]));
    }
    v.swap(next);
    if (!std::isfinite(residual)) {
      throw NumericError("policy_evaluation: non-finite values");
    }
    if (residual < tol) return v;
  }
  throw NumericError(residual_message("policy_evaluation", iter, residual));
}

Vector policy_evaluation(const Environment& env, const Policy& pi,
                         std::span<const double> mu, double tol) {
  return policy_evaluation(
      env, pi, mu, tol,
      default_max_iterations(env.discount(), env.reward_bound(), tol));
}

double exploitability_at(const Policy& pi, const Environment& env,
                         std::span<const double> mu, double tol) {
  const double inner = inner_tolerance(tol, env.discount());
  const ValueIterationResult best = value_iteration(env, mu, inner);
  const Vector own = policy_evaluation(env, pi, mu, inner);
  double gap = 0.0;
  for (int s = 0; s < env.num_states(); ++s) {
    gap += mu[s] * (best.v[s] - own[s]);
  }
  if (!std::isfinite(gap)) throw NumericError("exploitability: non-finite");
  if (gap < -10.0 * tol) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "exploitability: %.3e is below -10 tol",
                  gap);
    throw NumericError(buf);
  }
  return std::max(gap, 0.0);
}

double exploitability(const Policy& pi, const Environment& env, double tol) {
  const Vector mu = induced_population(pi, env);
  return exploitability_at(pi, env, mu, tol);
}

double SemiGradient::norm() const {
  double sq = 0.0;
  for (double x : theta) sq += x * x;
  for (double x : eta) sq += x * x;
  return std::sqrt(sq);
}

SemiGradient mean_path_semigradient(const UnifiedParameter& xi,
                                    const Environment& env,
                                    const FeatureMap& phi,
                                    const MeasureBasis& basis,
                                    const PolicyOperator& op) {
  const int n = env.num_states();
  const int na = env.num_actions();
  if (phi.num_states() != n || phi.num_actions() != na ||
      basis.grid_size() != n) {
    throw ConfigError("mean_path_semigradient: shapes do not match the env");
  }
  if (static_cast<int>(xi.theta.size()) != phi.dim() ||
      static_cast<int>(xi.eta.size()) != basis.dim()) {
    throw ConfigError("mean_path_semigradient: parameter dimensions");
  }
  const Vector q = q_table(phi, xi.theta);
  const Policy pi = policy_from_q(op, q, env.actions());
  const Vector m = basis.represent(xi.eta);
  const Vector d = stationary_distribution(pi, env, m);
  const double gamma = env.discount();

  // Expected next-step value under pi at every state.
  Vector v_pi(n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int a : env.actions().feasible(s)) {
      v_pi[s] += pi(s, a) * q[static_cast<std::size_t>(s) * na + a];
    }
  }

  SemiGradient g;
  g.theta.assign(phi.dim(), 0.0);
  Vector next_law(n, 0.0);
  std::vector<Successor> next;
  for (int s = 0; s < n; ++s) {
    if (d[s] == 0.0) continue;
    for (int a : env.actions().feasible(s)) {
      const double w = d[s] * pi(s, a);
      if (w == 0.0) continue;
      env.kernel(s, a, m, next);
      double bootstrap = 0.0;
      for (const Successor& x : next) {
        bootstrap += x.prob * v_pi[x.state];
        next_law[x.state] += w * x.prob;
      }
      const double delta = q[static_cast<std::size_t>(s) * na + a] -
                           gamma * bootstrap - env.reward(s, a, m);
      for (const SparseEntry& e : phi.evaluate(s, a)) {
        g.theta[e.index] += w * delta * e.value;
      }
    }
  }
  g.eta.assign(basis.dim(), 0.0);
  basis.apply_gram(xi.eta, g.eta);
  for (int s = 0; s < n; ++s) {
    if (next_law[s] == 0.0) continue;
    const auto psi = basis.evaluate(s);
    for (int i = 0; i < basis.dim(); ++i) g.eta[i] -= next_law[s] * psi[i];
  }
  return g;
}

double span_residual(std::span<const double> mu, const MeasureBasis& basis) {
  if (static_cast<int>(mu.size()) != basis.grid_size()) {
    throw ConfigError("span_residual: length mismatch");
  }
  // Modified Gram-Schmidt with one reorthogonalization pass; columns that
  // are numerically dependent on earlier ones are dropped.
  std::vector<Vector> q;
  auto remove_components = [&q](Vector& x) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& e : q) {
        const double c = std::inner_product(x.begin(), x.end(), e.begin(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * e[i];
      }
    }
  };
  for (const Vector& column : basis.masses()) {
    Vector x = column;
    const double before = l2_norm(x);
    remove_components(x);
    const double after = l2_norm(x);
    if (after <= 1e-12 * before) continue;
    for (double& value : x) value /= after;
    q.push_back(std::move(x));
  }
  Vector r(mu.begin(), mu.end());
  remove_components(r);
  return l2_norm(r);
}

}  // namespace mfg
