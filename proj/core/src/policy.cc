#include "mfg/policy.h"

#include <algorithm>
#include <cmath>

namespace mfg {

PolicyOperator PolicyOperator::Softmax(double inverse_temperature) {
  if (!(inverse_temperature > 0.0)) {
    throw ConfigError("softmax: inverse temperature must be > 0");
  }
  return PolicyOperator(Kind::kSoftmax, inverse_temperature);
}

void PolicyOperator::apply(std::span<const double> q,
                           std::span<const int> feasible,
                           std::span<double> probs) const {
  if (feasible.empty()) throw ConfigError("apply_policy: empty action mask");
  std::fill(probs.begin(), probs.end(), 0.0);
  int best = feasible.front();
  for (int a : feasible) {
    if (q[a] > q[best]) best = a;
  }
  if (kind_ == Kind::kArgmax) {
    probs[best] = 1.0;
    return;
  }
  const double q_max = q[best];
  double total = 0.0;
  for (int a : feasible) {
    const double w = std::exp(inverse_temperature_ * (q[a] - q_max));
    probs[a] = w;
    total += w;
  }
  for (int a : feasible) probs[a] /= total;
}

Vector apply_policy(const PolicyOperator& op, std::span<const double> q,
                    std::span<const int> feasible) {
  Vector probs(q.size());
  op.apply(q, feasible, probs);
  return probs;
}

int sample_action(std::span<const double> dist, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    if (dist[a] <= 0.0) continue;
    last_positive = static_cast<int>(a);
    cumulative += dist[a];
    if (u < cumulative) return last_positive;
  }
  // Round-off left u above the final cumulative sum.
  return last_positive;
}

Policy policy_from_q(const PolicyOperator& op, std::span<const double> q,
                     const ActionSpace& actions) {
  const int n_states = actions.num_states();
  const int n_actions = actions.size();
  Policy pi(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    op.apply(q.subspan(static_cast<std::size_t>(s) * n_actions, n_actions),
             actions.feasible(s), pi.row(s));
  }
  return pi;
}

Vector q_table(const FeatureMap& phi, std::span<const double> theta) {
  Vector q(static_cast<std::size_t>(phi.num_states()) * phi.num_actions());
  for (int s = 0; s < phi.num_states(); ++s) {
    for (int a = 0; a < phi.num_actions(); ++a) {
      q[static_cast<std::size_t>(s) * phi.num_actions() + a] =
          phi.dot(s, a, theta);
    }
  }
  return q;
}

Policy uniform_policy(const ActionSpace& actions) {
  Policy pi(actions.num_states(), actions.size());
  for (int s = 0; s < actions.num_states(); ++s) {
    const auto feasible = actions.feasible(s);
    for (int a : feasible) pi(s, a) = 1.0 / static_cast<double>(feasible.size());
  }
  return pi;
}

}  // namespace mfg
