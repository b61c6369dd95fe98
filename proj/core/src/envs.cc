#include "mfg/envs.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>

namespace mfg {

Environment::Environment(StateSpace states, ActionSpace actions,
                         double discount)
    : states_(states),
      actions_(std::move(actions)),
      discount_(discount),
      initial_(states.size(), 1.0 / states.size()) {
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw ConfigError("discount: must lie in [0, 1)");
  }
  if (actions_.num_states() != states_.size()) {
    throw ConfigError("Environment: action mask does not cover every state");
  }
}

int Environment::sample_next(int s, int a, std::span<const double> mu,
                             Rng& rng) const {
  thread_local std::vector<Successor> scratch;
  kernel(s, a, mu, scratch);
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (const Successor& next : scratch) {
    cumulative += next.prob;
    if (u < cumulative) return next.state;
  }
  return scratch.back().state;
}

// ---------------------------------------------------------------------------
// Grid motion

GridMotionEnvironment::GridMotionEnvironment(int grid, int num_speeds,
                                             double dt_over_ds,
                                             double discount)
    : Environment(StateSpace::IntervalGrid(grid, /*wrap=*/true),
                  ActionSpace(num_speeds, grid), discount),
      dt_over_ds_(dt_over_ds) {
  if (!(dt_over_ds > 0.0)) throw ConfigError("dt / ds must be > 0");
}

void GridMotionEnvironment::kernel(int s, int a, std::span<const double>,
                                   std::vector<Successor>& out) const {
  const int n = num_states();
  const double x = displacement(a);
  const double whole = std::floor(x);
  const double frac = x - whole;
  const int base = static_cast<int>(whole);
  const int lower = (s + base) % n;
  out.clear();
  if (frac == 0.0) {
    out.push_back({lower, 1.0});
  } else {
    out.push_back({lower, 1.0 - frac});
    out.push_back({(lower + 1) % n, frac});
  }
}

int GridMotionEnvironment::sample_next(int s, int a, std::span<const double>,
                                       Rng& rng) const {
  const int n = num_states();
  const double x = displacement(a);
  const double whole = std::floor(x);
  const double frac = x - whole;
  const int lower = (s + static_cast<int>(whole)) % n;
  // Same inverse-CDF order as kernel(): lower cell first.
  const double u = rng.uniform();
  return u < 1.0 - frac ? lower : (lower + 1) % n;
}

// ---------------------------------------------------------------------------
// Ring road

double ring_road_stimulus(double s) {
  return 0.2 * (std::sin(4.0 * std::numbers::pi * s) + 2.0);
}

RingRoadEnv::RingRoadEnv(RingRoadParams params)
    : GridMotionEnvironment(params.grid, params.grid, 1.0, params.discount),
      params_(params),
      mu_jam_(params.jam_cells / params.grid) {
  // The bracket is affine in mu(s) and a, so its extremes sit at mu(s) in
  // {0, 1} and the end points of the speed grid.
  double bound = 0.0;
  const double ds = states().cell_width();
  for (int s = 0; s < num_states(); ++s) {
    for (double m : {0.0, 1.0}) {
      for (int a : {0, num_actions() - 1}) {
        const double bracket = ring_road_stimulus(states().coordinate(s)) +
                               0.5 * (1.0 - m / mu_jam_) -
                               speed(a) / params_.max_speed;
        bound = std::max(bound, 0.5 * bracket * bracket * ds);
      }
    }
  }
  reward_bound_ = bound;
}

double RingRoadEnv::reward(int s, int a, std::span<const double> mu) const {
  const double bracket = ring_road_stimulus(states().coordinate(s)) +
                         0.5 * (1.0 - mu[s] / mu_jam_) -
                         speed(a) / params_.max_speed;
  return -0.5 * bracket * bracket * states().cell_width();
}

RingRoadEnv ring_road_env(int grid) {
  RingRoadParams params;
  params.grid = grid;
  return RingRoadEnv(params);
}

// ---------------------------------------------------------------------------
// Flocking

double neighbor(std::span<const double> mu, int s, double radius,
                const StateSpace& states) {
  if (!(radius > 0.0)) throw ConfigError("neighbor: radius must be > 0");
  const int n = states.size();
  const int half_width =
      static_cast<int>(std::floor(radius / states.cell_width() + 1e-9));
  const int lo = std::max(0, s - half_width);
  const int hi = std::min(n - 1, s + half_width);
  double mass = 0.0;
  double moment = 0.0;
  for (int j = lo; j <= hi; ++j) {
    mass += mu[j];
    moment += states.coordinate(j) * mu[j];
  }
  if (mass <= 0.0) return states.coordinate(s);
  return moment / mass;
}

double flocking_reward(double speed, double neighbor_location,
                       const FlockingParams& params, double cell_width) {
  const double gap = params.destination - neighbor_location;
  return -(speed * speed + params.alignment * gap * gap) * cell_width;
}

FlockingEnv::FlockingEnv(FlockingParams params)
    : GridMotionEnvironment(params.grid, params.grid, 1.0, params.discount),
      params_(params) {
  if (!(params.radius > 0.0)) throw ConfigError("flocking: radius must be > 0");
}

double FlockingEnv::reward_bound() const {
  const double max_speed = speed(num_actions() - 1);
  const double max_gap = params_.destination;
  return (max_speed * max_speed + params_.alignment * max_gap * max_gap) *
         states().cell_width();
}

double FlockingEnv::reward(int s, int a, std::span<const double> mu) const {
  return flocking_reward(speed(a), neighbor(mu, s, params_.radius, states()),
                         params_, states().cell_width());
}

FlockingEnv flocking_env(int grid) {
  FlockingParams params;
  params.grid = grid;
  return FlockingEnv(params);
}

// ---------------------------------------------------------------------------
// Routing

namespace {

// Next meaningful line with comments stripped; false at end of input.
bool next_line(std::istream& in, std::string& line, int& line_no) {
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) {
      raw.erase(hash);
    }
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = raw.substr(first);
    return true;
  }
  return false;
}

int parse_header(std::istream& in, const std::string& key, int& line_no) {
  std::string line;
  if (!next_line(in, line, line_no)) {
    throw ConfigError("network: missing '" + key + "' header");
  }
  std::istringstream fields(line);
  std::string word;
  long value = 0;
  std::string extra;
  if (!(fields >> word >> value) || word != key || (fields >> extra)) {
    throw ConfigError("network line " + std::to_string(line_no) +
                      ": expected '" + key + " <count>'");
  }
  if (value < 1) {
    throw ConfigError("network: '" + key + "' must be positive");
  }
  return static_cast<int>(value);
}

std::vector<std::vector<int>> out_edges(const RoutingNetwork& net) {
  std::vector<std::vector<int>> out(net.num_nodes + 1);
  for (int e = 0; e < net.num_edges(); ++e) {
    out[net.edges[e].first].push_back(e);
  }
  return out;
}

}  // namespace

RoutingNetwork parse_network(std::istream& in, int origin, int destination) {
  int line_no = 0;
  RoutingNetwork net;
  net.num_nodes = parse_header(in, "nodes", line_no);
  const int num_edges = parse_header(in, "edges", line_no);
  if (origin < 1 || origin > net.num_nodes || destination < 1 ||
      destination > net.num_nodes) {
    throw ConfigError("network: origin/destination node out of range");
  }
  net.origin = origin;
  net.destination = destination;
  std::string line;
  for (int e = 0; e < num_edges; ++e) {
    if (!next_line(in, line, line_no)) {
      throw ConfigError("network: expected " + std::to_string(num_edges) +
                        " edges, found " + std::to_string(e));
    }
    std::istringstream fields(line);
    long from = 0;
    long to = 0;
    std::string extra;
    if (!(fields >> from >> to) || (fields >> extra)) {
      throw ConfigError("network line " + std::to_string(line_no) +
                        ": expected 'from to'");
    }
    if (from < 1 || from > net.num_nodes || to < 1 || to > net.num_nodes) {
      throw ConfigError("network line " + std::to_string(line_no) +
                        ": node id out of range");
    }
    net.edges.emplace_back(static_cast<int>(from), static_cast<int>(to));
  }
  if (next_line(in, line, line_no)) {
    throw ConfigError("network line " + std::to_string(line_no) +
                      ": more edges than declared");
  }
  net.edges.emplace_back(destination, origin);

  // The destination must be reachable from the origin.
  const auto out = out_edges(net);
  std::vector<bool> seen(net.num_nodes + 1, false);
  std::queue<int> frontier;
  frontier.push(origin);
  seen[origin] = true;
  while (!frontier.empty()) {
    const int node = frontier.front();
    frontier.pop();
    for (int e : out[node]) {
      const int next = net.edges[e].second;
      if (!seen[next]) {
        seen[next] = true;
        frontier.push(next);
      }
    }
  }
  if (!seen[destination]) {
    throw ConfigError("network: destination " + std::to_string(destination) +
                      " is unreachable from origin " + std::to_string(origin));
  }
  for (const auto& [from, to] : net.edges) {
    if (out[to].empty()) {
      throw ConfigError("network: node " + std::to_string(to) +
                        " has no outgoing edge");
    }
  }
  return net;
}

RoutingNetwork load_network(const std::string& path, int origin,
                            int destination) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file '" + path + "'");
  return parse_network(in, origin, destination);
}

namespace {

ActionSpace routing_actions(const RoutingNetwork& net) {
  const auto out = out_edges(net);
  std::vector<std::vector<int>> feasible(net.num_edges());
  for (int e = 0; e < net.num_edges(); ++e) {
    feasible[e] = out[net.edges[e].second];
  }
  return ActionSpace(net.num_edges(), std::move(feasible));
}

}  // namespace

RoutingEnv::RoutingEnv(RoutingNetwork network, RoutingParams params)
    : Environment(StateSpace::GraphEdges(network.num_edges()),
                  routing_actions(network), params.discount),
      network_(std::move(network)),
      params_(params) {}

double RoutingEnv::reward_bound() const {
  return std::max(params_.congestion, params_.terminal);
}

double RoutingEnv::reward(int s, int, std::span<const double> mu) const {
  if (s == network_.restart_edge()) return params_.terminal;
  return -params_.congestion * mu[s] * mu[s];
}

void RoutingEnv::kernel(int, int a, std::span<const double>,
                        std::vector<Successor>& out) const {
  out.clear();
  out.push_back({a, 1.0});
}

int RoutingEnv::sample_next(int, int a, std::span<const double>,
                            Rng& rng) const {
  rng.uniform();  // keep one draw per transition across environments
  return a;
}

RoutingEnv sioux_falls_env(const std::string& network_path) {
  return RoutingEnv(load_network(network_path));
}

// ---------------------------------------------------------------------------
// Toy finite MFG

namespace {

Vector random_measure(int n, Rng& rng) {
  Vector m(n);
  double total = 0.0;
  for (double& x : m) {
    x = rng.uniform() + 1e-3;
    total += x;
  }
  for (double& x : m) x /= total;
  return m;
}

}  // namespace

ToyFiniteEnv::ToyFiniteEnv(ToyParams params)
    : Environment(StateSpace::GraphEdges(params.num_states),
                  ActionSpace(params.num_actions, params.num_states),
                  params.discount),
      params_(params) {
  const int ns = params.num_states;
  const int na = params.num_actions;
  if (ns > 6 || na > 6) {
    throw ConfigError("toy: at most 6 states and 6 actions");
  }
  if (!(params.epsilon >= 0.0 && params.epsilon <= 1.0)) {
    throw ConfigError("toy: epsilon must lie in [0, 1]");
  }
  if (params.latent_rank < 0 || params.latent_rank > ns) {
    throw ConfigError("toy: latent_rank must lie in [0, |S|]");
  }
  Rng rng(params.seed);
  for (int k = 0; k < params.latent_rank; ++k) {
    latent_.push_back(random_measure(ns, rng));
  }
  base_kernel_.assign(static_cast<std::size_t>(ns) * na * ns, 0.0);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      Vector row;
      if (latent_.empty()) {
        row = random_measure(ns, rng);
      } else {
        const Vector w = random_measure(params.latent_rank, rng);
        row.assign(ns, 0.0);
        for (int k = 0; k < params.latent_rank; ++k) {
          for (int j = 0; j < ns; ++j) row[j] += w[k] * latent_[k][j];
        }
      }
      std::copy(row.begin(), row.end(),
                base_kernel_.begin() + (static_cast<std::size_t>(s) * na + a) * ns);
    }
  }
  base_reward_.resize(static_cast<std::size_t>(ns) * na);
  for (double& r : base_reward_) r = rng.uniform();
}

double ToyFiniteEnv::base_kernel(int s, int a, int s_next) const {
  const int ns = params_.num_states;
  return base_kernel_[(static_cast<std::size_t>(s) * params_.num_actions + a) *
                          ns +
                      s_next];
}

double ToyFiniteEnv::base_reward(int s, int a) const {
  return base_reward_[static_cast<std::size_t>(s) * params_.num_actions + a];
}

double ToyFiniteEnv::reward_bound() const {
  return 1.0 + std::abs(params_.crowd);
}

double ToyFiniteEnv::reward(int s, int a, std::span<const double> mu) const {
  return base_reward(s, a) - params_.crowd * mu[s];
}

void ToyFiniteEnv::kernel(int s, int a, std::span<const double> mu,
                          std::vector<Successor>& out) const {
  const double eps = params_.epsilon;
  out.clear();
  for (int j = 0; j < params_.num_states; ++j) {
    const double p = (1.0 - eps) * base_kernel(s, a, j) + eps * mu[j];
    if (p > 0.0) out.push_back({j, p});
  }
}

ToyFiniteEnv toy_finite_env(int num_states, int num_actions,
                            std::uint64_t seed) {
  ToyParams params;
  params.num_states = num_states;
  params.num_actions = num_actions;
  params.seed = seed;
  return ToyFiniteEnv(params);
}

}  // namespace mfg
