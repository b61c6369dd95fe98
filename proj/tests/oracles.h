// Independent reference computations used by tests. Deliberately naive.

#ifndef MFG_TESTS_ORACLES_H_
#define MFG_TESTS_ORACLES_H_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mfg/envs.h"
#include "mfg/lfa.h"
#include "mfg/policy.h"

namespace mfg::oracle {

// Simplex projection by enumerating every support set and keeping the
// one whose KKT conditions hold.
inline Vector simplex_kkt(const Vector& v) {
  const int d = static_cast<int>(v.size());
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    double sum = 0.0;
    int k = 0;
    for (int i = 0; i < d; ++i) {
      if (mask >> i & 1u) {
        sum += v[i];
        ++k;
      }
    }
    const double tau = (sum - 1.0) / k;
    bool ok = true;
    Vector x(d, 0.0);
    for (int i = 0; i < d && ok; ++i) {
      if (mask >> i & 1u) {
        x[i] = v[i] - tau;
        ok = x[i] >= -1e-15;
      } else {
        ok = v[i] - tau <= 1e-15;
      }
    }
    if (!ok) continue;
    double dist = 0.0;
    for (int i = 0; i < d; ++i) dist += (x[i] - v[i]) * (x[i] - v[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

inline std::vector<Vector> naive_gram(const std::vector<Vector>& m, double w) {
  const std::size_t d = m.size();
  std::vector<Vector> g(d, Vector(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t s = 0; s < m[i].size(); ++s) {
        g[i][j] += w * m[i][s] * m[j][s];
      }
    }
  }
  return g;
}

// Dense state transition matrix of pi with the kernel frozen at mu.
inline Eigen::MatrixXd chain(const Policy& pi, const Environment& env,
                             const Vector& mu) {
  const int n = env.num_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  std::vector<Successor> succ;
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < env.num_actions(); ++a) {
      if (pi(s, a) == 0.0) continue;
      env.kernel(s, a, mu, succ);
      for (const auto& x : succ) p(s, x.state) += pi(s, a) * x.prob;
    }
  }
  return p;
}

// Left eigenvector of P for eigenvalue 1, normalized to sum 1.
inline Vector stationary_eigen(const Eigen::MatrixXd& p) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(p.transpose());
  int best = 0;
  for (int i = 1; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i] - 1.0) <
        std::abs(es.eigenvalues()[best] - 1.0)) {
      best = i;
    }
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  v /= v.sum();
  return Vector(v.data(), v.data() + v.size());
}

// V = (I - gamma P_pi)^{-1} r_pi for the MDP frozen at mu.
inline Vector policy_value(const Policy& pi, const Environment& env,
                           const Vector& mu) {
  const int n = env.num_states();
  const Eigen::MatrixXd p = chain(pi, env, mu);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < env.num_actions(); ++a) {
      if (pi(s, a) > 0.0) r(s) += pi(s, a) * env.reward(s, a, mu);
    }
  }
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(n, n) - env.discount() * p;
  const Eigen::VectorXd v = m.partialPivLu().solve(r);
  return Vector(v.data(), v.data() + n);
}

// Every deterministic policy over feasible actions.
inline std::vector<Policy> deterministic_policies(const Environment& env) {
  const int n = env.num_states();
  std::vector<Policy> out;
  std::vector<int> idx(n, 0);
  while (true) {
    Policy p(n, env.num_actions());
    for (int s = 0; s < n; ++s) p(s, env.actions().feasible(s)[idx[s]]) = 1.0;
    out.push_back(p);
    int s = 0;
    while (s < n && ++idx[s] ==
                        static_cast<int>(env.actions().feasible(s).size())) {
      idx[s++] = 0;
    }
    if (s == n) break;
  }
  return out;
}

// Best-response gap under mu by brute force over deterministic policies;
// the best deterministic policy maximizes every state's value at once.
inline double exploitability_bruteforce(const Policy& pi,
                                        const Environment& env,
                                        const Vector& mu) {
  const Vector v_pi = policy_value(pi, env, mu);
  Vector v_best(env.num_states(), -std::numeric_limits<double>::infinity());
  for (const Policy& d : deterministic_policies(env)) {
    const Vector v = policy_value(d, env, mu);
    for (int s = 0; s < env.num_states(); ++s) {
      v_best[s] = std::max(v_best[s], v[s]);
    }
  }
  double gap = 0.0;
  for (int s = 0; s < env.num_states(); ++s) gap += mu[s] * (v_best[s] - v_pi[s]);
  return gap;
}

}  // namespace mfg::oracle

#endif  // MFG_TESTS_ORACLES_H_
