// Shared domain types: discrete spaces, parameters, observations, run
// configuration, error types and the seeded random stream every run owns.

#ifndef MFG_CORE_H_
#define MFG_CORE_H_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

using Vector = std::vector<double>;

// Absolute tolerance on the simplex sum after a projected update.
inline constexpr double kSimplexTolerance = 1e-12;

// Invalid configuration or malformed input. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, solver non-convergence. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures. Maps to CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Discretized state space. Interval grids cover [0, 1) (or [0, 1] for
// non-wrapping grids) with cell i at coordinate i * cell_width.
class StateSpace {
 public:
  enum class Kind { kIntervalGrid, kGraphEdges };

  static StateSpace IntervalGrid(int size, bool wrap);
  static StateSpace GraphEdges(int edge_count);

  int size() const { return size_; }
  Kind kind() const { return kind_; }
  double cell_width() const { return cell_width_; }
  bool wrap() const { return wrap_; }
  bool is_grid() const { return kind_ == Kind::kIntervalGrid; }
  double coordinate(int index) const { return index * cell_width_; }

 private:
  StateSpace(int size, Kind kind, double cell_width, bool wrap)
      : size_(size), kind_(kind), cell_width_(cell_width), wrap_(wrap) {}

  int size_;
  Kind kind_;
  double cell_width_;
  bool wrap_;
};

// Finite action set with an optional per-state feasibility mask.
class ActionSpace {
 public:
  // Every action feasible everywhere.
  ActionSpace(int size, int num_states);
  // feasible[s] lists the allowed actions at state s in increasing order.
  ActionSpace(int size, std::vector<std::vector<int>> feasible);

  int size() const { return size_; }
  int num_states() const { return static_cast<int>(feasible_.size()); }
  std::span<const int> feasible(int state) const { return feasible_[state]; }
  bool is_feasible(int state, int action) const;
  bool all_feasible() const { return all_feasible_; }

 private:
  int size_;
  bool all_feasible_;
  std::vector<std::vector<int>> feasible_;
};

struct Observation {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
  int a_next = 0;
};

// The pair SemiSGD updates: value weights theta and population weights eta.
struct UnifiedParameter {
  Vector theta;
  Vector eta;

  friend bool operator==(const UnifiedParameter&, const UnifiedParameter&) =
      default;
};

class StepSizeSchedule {
 public:
  enum class Kind { kConstant, kLinearDecay };

  static StepSizeSchedule Constant(double alpha0);
  // alpha_t = a0 / (1 + b t).
  static StepSizeSchedule LinearDecay(double a0, double b);

  Kind kind() const { return kind_; }
  double a0() const { return a0_; }
  double b() const { return b_; }

  // Throws NumericError when the value leaves (0, 1).
  double at(std::int64_t t) const;

 private:
  StepSizeSchedule(Kind kind, double a0, double b)
      : kind_(kind), a0_(a0), b_(b) {}

  Kind kind_;
  double a0_;
  double b_;
};

double step_size(const StepSizeSchedule& schedule, std::int64_t t);

enum class Algorithm { kSemiSgd, kFpiVanilla, kFpiFp, kFpiMd, kFpiEr };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

// Learner settings. The discount factor belongs to the environment.
struct RunConfig {
  std::int64_t total_steps = 100000;
  StepSizeSchedule step_size = StepSizeSchedule::Constant(1e-3);
  double inverse_temperature = 1e9;
  // Radius D of the theta ball; 0 selects sqrt(d1) R / (1 - gamma).
  double ball_radius = 0.0;
  std::uint64_t seed = 1;
  std::int64_t inner_loop = 500;
  Algorithm algorithm = Algorithm::kSemiSgd;
};

// Throws ConfigError naming the offending field.
void validate_config(const RunConfig& config);

// True iff eta lies on the simplex (entries >= 0, sum within
// kSimplexTolerance of 1) and ||theta||_2 <= radius.
bool validate_parameter(const UnifiedParameter& xi, double radius);

bool on_simplex(std::span<const double> v, double tol = kSimplexTolerance);
double l2_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

// 64-bit Mersenne Twister with a fixed uniform mapping so streams are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  // Uniform integer on [0, n).
  int uniform_int(int n) {
    const int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

}  // namespace mfg

#endif  // MFG_CORE_H_
