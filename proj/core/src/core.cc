#include "mfg/core.h"

#include <cmath>
#include <algorithm>
#include <numeric>

namespace mfg {

StateSpace StateSpace::IntervalGrid(int size, bool wrap) {
  if (size < 1) throw ConfigError("StateSpace: size must be >= 1");
  return StateSpace(size, Kind::kIntervalGrid, 1.0 / size, wrap);
}

StateSpace StateSpace::GraphEdges(int edge_count) {
  if (edge_count < 1) throw ConfigError("StateSpace: edge_count must be >= 1");
  return StateSpace(edge_count, Kind::kGraphEdges, 1.0, false);
}

ActionSpace::ActionSpace(int size, int num_states)
    : size_(size), all_feasible_(true) {
  if (size < 1) throw ConfigError("ActionSpace: size must be >= 1");
  std::vector<int> all(size);
  std::iota(all.begin(), all.end(), 0);
  feasible_.assign(num_states, all);
}

ActionSpace::ActionSpace(int size, std::vector<std::vector<int>> feasible)
    : size_(size), all_feasible_(false), feasible_(std::move(feasible)) {
  if (size < 1) throw ConfigError("ActionSpace: size must be >= 1");
  bool all = true;
  for (std::size_t s = 0; s < feasible_.size(); ++s) {
    const auto& row = feasible_[s];
    if (row.empty()) {
      throw ConfigError("ActionSpace: state " + std::to_string(s) +
                        " has no feasible action");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] < 0 || row[i] >= size) {
        throw ConfigError("ActionSpace: action index out of range");
      }
      if (i > 0 && row[i] <= row[i - 1]) {
        throw ConfigError("ActionSpace: feasible actions must be increasing");
      }
    }
    all = all && static_cast<int>(row.size()) == size;
  }
  all_feasible_ = all;
}

bool ActionSpace::is_feasible(int state, int action) const {
  if (state < 0 || state >= num_states() || action < 0 || action >= size_) {
    return false;
  }
  if (all_feasible_) return true;
  const auto& row = feasible_[state];
  return std::binary_search(row.begin(), row.end(), action);
}

StepSizeSchedule StepSizeSchedule::Constant(double alpha0) {
  return StepSizeSchedule(Kind::kConstant, alpha0, 0.0);
}

StepSizeSchedule StepSizeSchedule::LinearDecay(double a0, double b) {
  if (b < 0.0) throw ConfigError("step_size: decay rate b must be >= 0");
  return StepSizeSchedule(Kind::kLinearDecay, a0, b);
}

double StepSizeSchedule::at(std::int64_t t) const {
  if (t < 0) throw ConfigError("step_size: t must be >= 0");
  const double alpha = kind_ == Kind::kConstant
                           ? a0_
                           : a0_ / (1.0 + b_ * static_cast<double>(t));
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw NumericError("step_size: alpha_" + std::to_string(t) + " = " +
                       std::to_string(alpha) + " is outside (0, 1)");
  }
  return alpha;
}

double step_size(const StepSizeSchedule& schedule, std::int64_t t) {
  return schedule.at(t);
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSemiSgd: return "semisgd";
    case Algorithm::kFpiVanilla: return "fpi-vanilla";
    case Algorithm::kFpiFp: return "fpi-fp";
    case Algorithm::kFpiMd: return "fpi-md";
    case Algorithm::kFpiEr: return "fpi-er";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kSemiSgd, Algorithm::kFpiVanilla,
                      Algorithm::kFpiFp, Algorithm::kFpiMd, Algorithm::kFpiEr}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("algorithm: unknown value '" + name + "'");
}

void validate_config(const RunConfig& config) {
  if (config.total_steps < 0) throw ConfigError("steps: must be >= 0");
  if (!(config.inverse_temperature > 0.0)) {
    throw ConfigError("inverse_temperature: must be > 0");
  }
  if (!(config.ball_radius >= 0.0)) throw ConfigError("ball_radius: must be >= 0");
  if (config.algorithm != Algorithm::kSemiSgd) {
    if (config.inner_loop < 1) throw ConfigError("inner_k: must be >= 1");
    if (config.inner_loop > config.total_steps) {
      throw ConfigError("inner_k: exceeds the total step budget");
    }
  }
  const double a0 = config.step_size.a0();
  if (!(a0 > 0.0 && a0 < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
}

bool on_simplex(std::span<const double> v, double tol) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

double l2_norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool validate_parameter(const UnifiedParameter& xi, double radius) {
  if (!all_finite(xi.theta) || !on_simplex(xi.eta)) return false;
  // Relative slack for the rounding of D * v / ||v||.
  return l2_norm(xi.theta) <= radius * (1.0 + 1e-12);
}

}  // namespace mfg
