// Policy operators mapping action values to per-state action distributions.

#ifndef MFG_POLICY_H_
#define MFG_POLICY_H_

#include <span>

#include "mfg/core.h"
#include "mfg/lfa.h"

namespace mfg {

class PolicyOperator {
 public:
  enum class Kind { kSoftmax, kArgmax };

  static PolicyOperator Softmax(double inverse_temperature);
  static PolicyOperator Argmax() { return PolicyOperator(Kind::kArgmax, 0.0); }

  Kind kind() const { return kind_; }
  double inverse_temperature() const { return inverse_temperature_; }

  // Writes the distribution over all |A| actions into `probs` given the
  // action values `q` (length |A|) at one state. Infeasible actions get 0.
  // Softmax subtracts the feasible maximum before exponentiating; argmax
  // breaks ties towards the lowest action index.
  void apply(std::span<const double> q, std::span<const int> feasible,
             std::span<double> probs) const;

 private:
  PolicyOperator(Kind kind, double l) : kind_(kind), inverse_temperature_(l) {}

  Kind kind_;
  double inverse_temperature_;
};

// Throws ConfigError on an empty mask.
Vector apply_policy(const PolicyOperator& op, std::span<const double> q,
                    std::span<const int> feasible);

// Inverse-CDF sampling in increasing action order; consumes one uniform.
int sample_action(std::span<const double> dist, Rng& rng);

// A stationary policy as an |S| x |A| table of probabilities.
struct Policy {
  int num_states = 0;
  int num_actions = 0;
  Vector probs;

  Policy() = default;
  Policy(int s, int a)
      : num_states(s),
        num_actions(a),
        probs(static_cast<std::size_t>(s) * a, 0.0) {}

  double operator()(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * num_actions + a];
  }
  double& operator()(int s, int a) {
    return probs[static_cast<std::size_t>(s) * num_actions + a];
  }
  std::span<const double> row(int s) const {
    return {probs.data() + static_cast<std::size_t>(s) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }
  std::span<double> row(int s) {
    return {probs.data() + static_cast<std::size_t>(s) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }

  friend bool operator==(const Policy&, const Policy&) = default;
};

// Applies `op` state by state to a tabular Q (|S| x |A|, row-major).
Policy policy_from_q(const PolicyOperator& op, std::span<const double> q,
                     const ActionSpace& actions);

// Q(s, a) = <phi(s, a), theta> for every pair, row-major.
Vector q_table(const FeatureMap& phi, std::span<const double> theta);

// Uniform over feasible actions.
Policy uniform_policy(const ActionSpace& actions);

}  // namespace mfg

#endif  // MFG_POLICY_H_
