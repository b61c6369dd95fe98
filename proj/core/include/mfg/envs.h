// Benchmark mean field games: speed control on a ring road, flocking,
// routing on a road network, and a small random finite MFG used as a test
// bed. Every environment exposes its exact transition kernel, so reference
// equilibria and exploitability can be computed by dynamic programming.

#ifndef MFG_ENVS_H_
#define MFG_ENVS_H_

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfg/core.h"

namespace mfg {

struct Successor {
  int state;
  double prob;
};

// Reward r(s, a, mu), kernel P(. | s, a, mu) and the initial distribution.
// `mu` is always a vector of per-cell masses over the state space.
// Implementations are immutable; concurrent use with distinct Rngs is safe.
class Environment {
 public:
  Environment(StateSpace states, ActionSpace actions, double discount);
  virtual ~Environment() = default;

  const StateSpace& states() const { return states_; }
  const ActionSpace& actions() const { return actions_; }
  int num_states() const { return states_.size(); }
  int num_actions() const { return actions_.size(); }
  double discount() const { return discount_; }
  const Vector& initial_distribution() const { return initial_; }

  virtual std::string name() const = 0;
  // Declared bound R >= |r(s, a, mu)| over all arguments.
  virtual double reward_bound() const = 0;
  virtual double reward(int s, int a, std::span<const double> mu) const = 0;
  // Replaces `out` with the nonzero entries of P(. | s, a, mu).
  virtual void kernel(int s, int a, std::span<const double> mu,
                      std::vector<Successor>& out) const = 0;
  // True when the kernel ignores mu.
  virtual bool population_independent_kernel() const = 0;

  // Inverse-CDF draw from kernel(s, a, mu) in listed order; consumes
  // exactly one uniform.
  virtual int sample_next(int s, int a, std::span<const double> mu,
                          Rng& rng) const;

 protected:
  StateSpace states_;
  ActionSpace actions_;
  double discount_;
  Vector initial_;
};

// Motion on a wrapping unit-interval grid: the agent picks speed
// a = k / |A| and moves a * dt / ds cells. A fractional displacement is
// rounded stochastically, up with probability equal to its fractional part,
// so the mean displacement is exact.
class GridMotionEnvironment : public Environment {
 public:
  GridMotionEnvironment(int grid, int num_speeds, double dt_over_ds,
                        double discount);

  double speed(int a) const { return static_cast<double>(a) / num_actions(); }
  double displacement(int a) const { return speed(a) * dt_over_ds_; }

  void kernel(int s, int a, std::span<const double> mu,
              std::vector<Successor>& out) const override;
  bool population_independent_kernel() const override { return true; }
  int sample_next(int s, int a, std::span<const double> mu,
                  Rng& rng) const override;

 private:
  double dt_over_ds_;
};

// b(s) = 0.2 (sin(4 pi s) + 2).
double ring_road_stimulus(double s);

struct RingRoadParams {
  int grid = 50;
  double discount = 0.98;
  double jam_cells = 3.0;  // mu_jam = jam_cells / |S|
  double max_speed = 1.0;
};

// r(s, a, mu) = -1/2 (b(s) + 1/2 (1 - mu(s) / mu_jam) - a / a_max)^2 ds.
class RingRoadEnv : public GridMotionEnvironment {
 public:
  explicit RingRoadEnv(RingRoadParams params = {});

  std::string name() const override { return "ring-road"; }
  double reward_bound() const override { return reward_bound_; }
  double reward(int s, int a, std::span<const double> mu) const override;
  double jam_density() const { return mu_jam_; }

 private:
  RingRoadParams params_;
  double mu_jam_;
  double reward_bound_;
};

RingRoadEnv ring_road_env(int grid = 50);

// Mean location of the population inside [s - radius, s + radius], with
// the measure padded by zero outside [0, 1]. Returns the coordinate of s
// itself when the window carries no mass.
double neighbor(std::span<const double> mu, int s, double radius,
                const StateSpace& states);

struct FlockingParams {
  int grid = 50;
  double discount = 0.98;
  double alignment = 0.5;  // c
  double radius = 0.1;
  double destination = 1.0;
};

// -(a^2 + c (s_det - neighbor)^2) ds.
double flocking_reward(double speed, double neighbor_location,
                       const FlockingParams& params, double cell_width);

class FlockingEnv : public GridMotionEnvironment {
 public:
  explicit FlockingEnv(FlockingParams params = {});

  std::string name() const override { return "flocking"; }
  double reward_bound() const override;
  double reward(int s, int a, std::span<const double> mu) const override;

 private:
  FlockingParams params_;
};

FlockingEnv flocking_env(int grid = 50);

// Directed road network whose edges are the states of the routing game. The
// final edge is the restart edge from the destination back to the origin.
struct RoutingNetwork {
  int num_nodes = 0;
  int origin = 1;
  int destination = 20;
  // 1-based (from, to) node ids; the restart edge is last.
  std::vector<std::pair<int, int>> edges;

  int num_edges() const { return static_cast<int>(edges.size()); }
  int restart_edge() const { return num_edges() - 1; }
};

// Parses `nodes <N>`, `edges <E>`, then E lines `from to` (1-based), with
// `#` comments, and appends the restart edge. Throws ConfigError on
// malformed input, ids out of range, dead ends, or an unreachable
// destination.
RoutingNetwork parse_network(std::istream& in, int origin = 1,
                             int destination = 20);
// As parse_network; throws IoError when the file cannot be read.
RoutingNetwork load_network(const std::string& path, int origin = 1,
                            int destination = 20);

struct RoutingParams {
  double discount = 0.5;
  double congestion = 1e5;  // c1
  double terminal = 10.0;   // c2
};

// Agents on edge s choose the next edge among the out-edges of its head
// node and move there deterministically.
// r(s, a, mu) = -c1 mu(s)^2 [s != restart] + c2 [s = restart].
class RoutingEnv : public Environment {
 public:
  RoutingEnv(RoutingNetwork network, RoutingParams params = {});

  std::string name() const override { return "sioux-falls"; }
  double reward_bound() const override;
  double reward(int s, int a, std::span<const double> mu) const override;
  void kernel(int s, int a, std::span<const double> mu,
              std::vector<Successor>& out) const override;
  bool population_independent_kernel() const override { return true; }
  int sample_next(int s, int a, std::span<const double> mu,
                  Rng& rng) const override;

  const RoutingNetwork& network() const { return network_; }

 private:
  RoutingNetwork network_;
  RoutingParams params_;
};

RoutingEnv sioux_falls_env(const std::string& network_path);

struct ToyParams {
  int num_states = 3;
  int num_actions = 2;
  std::uint64_t seed = 7;
  double epsilon = 0.1;    // weight of mu in the kernel mix
  double discount = 0.9;
  double crowd = 0.5;      // reward penalty per unit of own-state mass
  // When > 0, every base-kernel row is a mixture of this many latent
  // measures, making the induced populations lie in their span.
  int latent_rank = 0;
};

// Random finite MFG, linear by construction:
//   P(s'|s,a,mu) = (1 - eps) P0(s'|s,a) + eps mu(s'),
//   r(s,a,mu)    = r0(s,a) - crowd * mu(s),   r0 ~ U(0, 1).
class ToyFiniteEnv : public Environment {
 public:
  explicit ToyFiniteEnv(ToyParams params);

  std::string name() const override { return "toy"; }
  double reward_bound() const override;
  double reward(int s, int a, std::span<const double> mu) const override;
  void kernel(int s, int a, std::span<const double> mu,
              std::vector<Successor>& out) const override;
  bool population_independent_kernel() const override {
    return params_.epsilon == 0.0;
  }

  const ToyParams& params() const { return params_; }
  double base_kernel(int s, int a, int s_next) const;
  double base_reward(int s, int a) const;
  // The latent measures (empty when latent_rank == 0).
  const std::vector<Vector>& latent_measures() const { return latent_; }

 private:
  ToyParams params_;
  Vector base_kernel_;  // (s, a, s') row-major
  Vector base_reward_;  // (s, a)
  std::vector<Vector> latent_;
};

ToyFiniteEnv toy_finite_env(int num_states, int num_actions,
                            std::uint64_t seed);

}  // namespace mfg

#endif  // MFG_ENVS_H_
