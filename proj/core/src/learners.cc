#include "mfg/learners.h"

#include <algorithm>
#include <cmath>

namespace mfg {

std::string to_string(FpiVariant variant) {
  switch (variant) {
    case FpiVariant::kVanilla: return "vanilla";
    case FpiVariant::kFp: return "fp";
    case FpiVariant::kMd: return "md";
    case FpiVariant::kEr: return "er";
  }
  return "unknown";
}

FpiVariant parse_variant(const std::string& name) {
  for (FpiVariant v : {FpiVariant::kVanilla, FpiVariant::kFp, FpiVariant::kMd,
                       FpiVariant::kEr}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("variant: unknown value '" + name + "'");
}

FpiVariant fpi_variant(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kFpiVanilla: return FpiVariant::kVanilla;
    case Algorithm::kFpiFp: return FpiVariant::kFp;
    case Algorithm::kFpiMd: return FpiVariant::kMd;
    case Algorithm::kFpiEr: return FpiVariant::kEr;
    case Algorithm::kSemiSgd: break;
  }
  throw ConfigError("algorithm: semisgd has no FPI variant");
}

double default_ball_radius(const Environment& env, const FeatureMap& phi) {
  return std::sqrt(static_cast<double>(phi.dim())) * env.reward_bound() /
         (1.0 - env.discount());
}

LearningProblem make_problem(const Environment& env, const FeatureMap& phi,
                             const MeasureBasis& basis,
                             const PolicyOperator& policy,
                             const RunConfig& config,
                             const RunOptions& options) {
  validate_config(config);
  if (phi.num_states() != env.num_states() ||
      phi.num_actions() != env.num_actions()) {
    throw ConfigError("features: shape does not match the environment");
  }
  if (basis.grid_size() != env.num_states()) {
    throw ConfigError("basis: grid size does not match the environment");
  }
  double radius = config.ball_radius;
  if (radius == 0.0) radius = default_ball_radius(env, phi);
  if (!(radius > 0.0)) {
    // A zero reward bound admits only theta = 0; keep a positive radius.
    radius = 1.0;
  }
  return LearningProblem{env, phi, basis, policy, radius, options};
}

namespace {

struct Scratch {
  Vector population;
  Vector q_row;
  Vector probs;
  Vector grad;
};

Scratch& thread_scratch() {
  thread_local Scratch scratch;
  return scratch;
}

// Q(s, .) from theta, or a row of a frozen table.
std::span<const double> q_row(const LearningProblem& p,
                              std::span<const double> theta,
                              const Vector* frozen_q, int s, Vector& buf) {
  const int na = p.env.num_actions();
  if (frozen_q) {
    return {frozen_q->data() + static_cast<std::size_t>(s) * na,
            static_cast<std::size_t>(na)};
  }
  if (p.phi.is_one_hot()) {
    return theta.subspan(static_cast<std::size_t>(s) * na, na);
  }
  buf.resize(na);
  for (int a = 0; a < na; ++a) buf[a] = p.phi.dot(s, a, theta);
  return buf;
}

int draw_action(const LearningProblem& p, const PolicyOperator& op,
                std::span<const double> theta, const Vector* frozen_q, int s,
                Rng& rng, Scratch& scratch) {
  const auto q = q_row(p, theta, frozen_q, s, scratch.q_row);
  scratch.probs.resize(p.env.num_actions());
  op.apply(q, p.env.actions().feasible(s), scratch.probs);
  return sample_action(scratch.probs, rng);
}

std::span<const double> represented(const MeasureBasis& basis,
                                    std::span<const double> eta, Vector& buf) {
  if (basis.represents_directly()) return eta;
  buf.resize(basis.grid_size());
  basis.represent(eta, buf);
  return buf;
}

// One transition and update. `population` is what reward and kernel see;
// `frozen_q` (null for SemiSGD) drives the next action.
void step_impl(LearnerState& st, const LearningProblem& p, double alpha,
               std::span<const double> population, const Vector* frozen_q,
               const PolicyOperator& op, Scratch& scratch) {
  const Environment& env = p.env;
  Observation obs;
  obs.s = st.s;
  obs.a = st.a;
  obs.r = env.reward(obs.s, obs.a, population);
  obs.s_next = env.sample_next(obs.s, obs.a, population, st.rng);
  obs.a_next =
      draw_action(p, op, st.xi.theta, frozen_q, obs.s_next, st.rng, scratch);

  Vector& theta = st.xi.theta;
  const double delta = td_error(theta, obs, p.phi, env.discount());
  if (!std::isfinite(delta)) {
    throw NumericError("non-finite TD error at step " + std::to_string(st.t));
  }
  for (const SparseEntry& e : p.phi.evaluate(obs.s, obs.a)) {
    const double old = theta[e.index];
    theta[e.index] = old - alpha * e.value * delta;
    st.theta_sq_norm += theta[e.index] * theta[e.index] - old * old;
  }
  if (p.options.project_theta &&
      st.theta_sq_norm > 0.998 * p.ball_radius * p.ball_radius) {
    double sq = 0.0;
    for (double x : theta) sq += x * x;
    if (sq > p.ball_radius * p.ball_radius) {
      const double scale = p.ball_radius / std::sqrt(sq);
      for (double& x : theta) x *= scale;
      sq = 0.0;
      for (double x : theta) sq += x * x;
    }
    st.theta_sq_norm = sq;
  }

  Vector& eta = st.xi.eta;
  const int d2 = p.basis.dim();
  scratch.grad.resize(d2);
  p.basis.apply_gram(eta, scratch.grad);
  const auto psi = p.basis.evaluate(obs.s_next);
  for (int i = 0; i < d2; ++i) eta[i] -= alpha * (scratch.grad[i] - psi[i]);
  if (p.options.project_eta) project_simplex_inplace(eta);

  st.s = obs.s_next;
  st.a = obs.a_next;
  ++st.t;
}

class Recorder {
 public:
  Recorder(const LearningProblem& p, const MetricsSpec& spec,
           std::int64_t total)
      : p_(p), spec_(spec), total_(total) {
    if (spec.cadence < 1) throw ConfigError("cadence: must be >= 1");
    if (spec.exploitability_cadence < 0) {
      throw ConfigError("exploitability cadence: must be >= 0");
    }
  }

  bool due(std::int64_t t) const {
    return t % spec_.cadence == 0 || t == total_;
  }

  // `population` is the reported measure on the env grid; `behavior_q` the
  // Q table whose policy is evaluated.
  void record(const LearnerState& st, std::span<const double> population,
              const Vector* behavior_q) {
    if (!all_finite(st.xi.theta) || !all_finite(st.xi.eta)) {
      throw NumericError("non-finite parameter at step " +
                         std::to_string(st.t));
    }
    MetricSnapshot snap;
    snap.step = st.t;
    if (spec_.reference_mu) {
      const int ref_size = static_cast<int>(spec_.reference_mu->size());
      snap.mse = mse(resample_masses(population, ref_size),
                     *spec_.reference_mu);
    }
    const std::int64_t ec = spec_.exploitability_cadence;
    if (ec > 0 && (st.t % ec == 0 || st.t == total_)) {
      const Vector q =
          behavior_q ? *behavior_q : q_table(p_.phi, st.xi.theta);
      const Policy pi = policy_from_q(p_.policy, q, p_.env.actions());
      snap.exploitability = exploitability(pi, p_.env);
    }
    if (spec_.reference_xi &&
        spec_.reference_xi->theta.size() == st.xi.theta.size() &&
        spec_.reference_xi->eta.size() == st.xi.eta.size()) {
      double sq = 0.0;
      for (std::size_t i = 0; i < st.xi.theta.size(); ++i) {
        const double d = st.xi.theta[i] - spec_.reference_xi->theta[i];
        sq += d * d;
      }
      for (std::size_t i = 0; i < st.xi.eta.size(); ++i) {
        const double d = st.xi.eta[i] - spec_.reference_xi->eta[i];
        sq += d * d;
      }
      snap.param_norm_gap = std::sqrt(sq);
    }
    for (double x : {snap.mse.value_or(0.0), snap.exploitability.value_or(0.0),
                     snap.param_norm_gap.value_or(0.0)}) {
      if (!std::isfinite(x)) {
        throw NumericError("non-finite metric at step " +
                           std::to_string(st.t));
      }
    }
    snapshots_.push_back(snap);
  }

  std::vector<MetricSnapshot> take() { return std::move(snapshots_); }

 private:
  const LearningProblem& p_;
  const MetricsSpec& spec_;
  std::int64_t total_;
  std::vector<MetricSnapshot> snapshots_;
};

// Infeasible entries carry -inf out of value iteration; report them as 0.
Vector finite_q(Vector q) {
  for (double& x : q) {
    if (!std::isfinite(x)) x = 0.0;
  }
  return q;
}

}  // namespace

LearnerState init_learner(const LearningProblem& problem,
                          const RunConfig& config) {
  LearnerState st;
  st.rng = Rng(config.seed);
  st.xi.theta.assign(problem.phi.dim(), 0.0);
  st.xi.eta.resize(problem.basis.dim());
  for (double& x : st.xi.eta) x = st.rng.uniform();
  project_simplex_inplace(st.xi.eta);
  st.s = st.rng.uniform_int(problem.env.num_states());
  st.a = draw_action(problem, problem.policy, st.xi.theta, nullptr, st.s,
                     st.rng, thread_scratch());
  st.t = 0;
  st.theta_sq_norm = 0.0;
  return st;
}

void semisgd_step(LearnerState& state, const LearningProblem& problem,
                  double alpha) {
  Scratch& scratch = thread_scratch();
  const auto population =
      represented(problem.basis, state.xi.eta, scratch.population);
  step_impl(state, problem, alpha, population, nullptr, problem.policy,
            scratch);
}

RunRecord run_semisgd(const Environment& env, const RunConfig& config,
                      const FeatureMap& phi, const MeasureBasis& basis,
                      const PolicyOperator& policy, const MetricsSpec& metrics,
                      const RunOptions& options, const StepObserver& observer) {
  const LearningProblem problem =
      make_problem(env, phi, basis, policy, config, options);
  LearnerState st = init_learner(problem, config);
  Recorder recorder(problem, metrics, config.total_steps);
  Vector buf;
  if (observer) observer(st);
  recorder.record(st, represented(basis, st.xi.eta, buf), nullptr);
  for (std::int64_t t = 0; t < config.total_steps; ++t) {
    semisgd_step(st, problem, config.step_size.at(t));
    if (observer) observer(st);
    if (recorder.due(st.t)) {
      recorder.record(st, represented(basis, st.xi.eta, buf), nullptr);
    }
  }
  RunRecord out;
  out.seed = config.seed;
  out.snapshots = recorder.take();
  out.final_population = basis.represent(st.xi.eta);
  out.final_parameter = std::move(st.xi);
  return out;
}

Vector mix_population(std::span<const double> hist,
                      std::span<const double> fresh, double alpha) {
  if (hist.size() != fresh.size()) {
    throw ConfigError("mix_population: length mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("mix_population: alpha must lie in [0, 1]");
  }
  Vector out(hist.size());
  double total = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    out[i] = (1.0 - alpha) * hist[i] + alpha * fresh[i];
    total += out[i];
  }
  if (!(total > 0.0)) throw NumericError("mix_population: zero mass");
  for (double& x : out) x /= total;
  return out;
}

Vector mix_q(std::span<const double> hist, std::span<const double> fresh,
             double alpha) {
  if (hist.size() != fresh.size()) throw ConfigError("mix_q: length mismatch");
  Vector out(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) {
    out[i] = hist[i] + alpha * fresh[i];
  }
  return out;
}

RunRecord run_online_fpi(const Environment& env, const RunConfig& config,
                         FpiVariant variant, const FeatureMap& phi,
                         const MeasureBasis& basis,
                         const PolicyOperator& policy,
                         const MetricsSpec& metrics, const RunOptions& options,
                         const StepObserver& observer) {
  if (config.inner_loop < 1) throw ConfigError("inner_k: must be >= 1");
  if (config.inner_loop > config.total_steps) {
    throw ConfigError("inner_k: exceeds the total step budget");
  }
  PolicyOperator op = policy;
  if (variant == FpiVariant::kEr) {
    if (policy.kind() != PolicyOperator::Kind::kSoftmax) {
      throw ConfigError("fpi-er: requires a softmax policy operator");
    }
    op = PolicyOperator::Softmax(policy.inverse_temperature() *
                                 kEntropyTemperatureScale);
  }
  const LearningProblem problem =
      make_problem(env, phi, basis, op, config, options);
  LearnerState st = init_learner(problem, config);
  Recorder recorder(problem, metrics, config.total_steps);
  Scratch& scratch = thread_scratch();

  const std::size_t q_size =
      static_cast<std::size_t>(env.num_states()) * env.num_actions();
  Vector q_hist(q_size, 0.0);
  Vector mu_hist = basis.represent(st.xi.eta);
  Vector frozen_q = q_table(phi, st.xi.theta);
  Vector frozen_mu = mu_hist;
  Vector buf;

  auto reported = [&]() -> std::span<const double> {
    if (variant == FpiVariant::kFp) return mu_hist;
    return represented(basis, st.xi.eta, buf);
  };

  if (observer) observer(st);
  recorder.record(st, reported(), &frozen_q);
  const std::int64_t total = config.total_steps;
  while (st.t < total) {
    const std::int64_t inner = std::min(config.inner_loop, total - st.t);
    frozen_q = variant == FpiVariant::kMd ? q_hist : q_table(phi, st.xi.theta);
    if (variant == FpiVariant::kFp) {
      frozen_mu = mu_hist;
    } else {
      frozen_mu = basis.represent(st.xi.eta);
    }
    for (std::int64_t k = 0; k < inner; ++k) {
      const double alpha = config.step_size.at(st.t);
      step_impl(st, problem, alpha, frozen_mu, &frozen_q, op, scratch);
      if (k + 1 == inner) {
        if (variant == FpiVariant::kFp) {
          mu_hist = mix_population(mu_hist, basis.represent(st.xi.eta), alpha);
        } else if (variant == FpiVariant::kMd) {
          q_hist = mix_q(q_hist, q_table(phi, st.xi.theta), alpha);
        }
      }
      if (observer) observer(st);
      if (recorder.due(st.t)) recorder.record(st, reported(), &frozen_q);
    }
  }
  RunRecord out;
  out.seed = config.seed;
  out.snapshots = recorder.take();
  const auto final_population = reported();
  out.final_population.assign(final_population.begin(),
                              final_population.end());
  out.final_parameter = std::move(st.xi);
  return out;
}

RunRecord run_learner(const Environment& env, const RunConfig& config,
                      const FeatureMap& phi, const MeasureBasis& basis,
                      const MetricsSpec& metrics, const RunOptions& options) {
  const PolicyOperator op =
      PolicyOperator::Softmax(config.inverse_temperature);
  if (config.algorithm == Algorithm::kSemiSgd) {
    return run_semisgd(env, config, phi, basis, op, metrics, options);
  }
  return run_online_fpi(env, config, fpi_variant(config.algorithm), phi, basis,
                        op, metrics, options);
}

ReferenceSolution model_based_fpi_fp(const Environment& env, int outer_iters,
                                     int vi_iters, double vi_tol, bool trace) {
  if (outer_iters < 1) throw ConfigError("outer_iters: must be >= 1");
  if (!(vi_tol > 0.0)) throw ConfigError("vi_tol: must be > 0");
  if (vi_iters <= 0) {
    vi_iters =
        2 * default_max_iterations(env.discount(), env.reward_bound(), vi_tol);
  }
  const int n = env.num_states();
  const int na = env.num_actions();
  ReferenceSolution out;
  Vector mu_hist = env.initial_distribution();
  Vector weights(static_cast<std::size_t>(n) * na, 0.0);
  Vector warm;
  Policy latest;
  for (int k = 0; k < outer_iters; ++k) {
    ValueIterationResult vi = value_iteration(env, mu_hist, vi_tol, vi_iters,
                                              warm.empty() ? nullptr : &warm);
    warm = vi.v;
    const Policy& greedy = vi.greedy;
    const Vector mu_new = induced_population(greedy, env);
    out.iterations = k + 1;

    ValueIterationResult check =
        value_iteration(env, mu_new, vi_tol, vi_iters, &warm);
    if (check.greedy == greedy) {
      out.exact = true;
      out.q_star = finite_q(std::move(check.q));
      out.mu_star = mu_new;
      out.pi_star = greedy;
      out.final_exploitability = exploitability_at(greedy, env, mu_new);
      out.exploitability_trace.push_back(out.final_exploitability);
      return out;
    }

    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < na; ++a) {
        weights[static_cast<std::size_t>(s) * na + a] +=
            mu_new[s] * greedy(s, a);
      }
    }
    for (int s = 0; s < n; ++s) {
      mu_hist[s] = (k * mu_hist[s] + mu_new[s]) / (k + 1);
    }
    latest = greedy;

    // Averaged policy; states never visited keep the latest greedy row.
    Policy avg(n, na);
    for (int s = 0; s < n; ++s) {
      double total = 0.0;
      for (int a = 0; a < na; ++a) {
        total += weights[static_cast<std::size_t>(s) * na + a];
      }
      for (int a = 0; a < na; ++a) {
        avg(s, a) = total > 0.0
                        ? weights[static_cast<std::size_t>(s) * na + a] / total
                        : latest(s, a);
      }
    }
    out.pi_star = std::move(avg);
    if (trace || k + 1 == outer_iters) {
      out.exploitability_trace.push_back(exploitability(out.pi_star, env));
    }
  }
  ValueIterationResult final_vi =
      value_iteration(env, mu_hist, vi_tol, vi_iters, &warm);
  out.q_star = finite_q(std::move(final_vi.q));
  out.mu_star = std::move(mu_hist);
  out.final_exploitability = out.exploitability_trace.back();
  return out;
}

}  // namespace mfg
