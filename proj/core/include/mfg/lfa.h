// Population-aware linear function approximation: state-action feature
// maps, measure bases with their Gram matrices, the two semi-gradients and
// the projections that keep the unified parameter feasible.
//
// Measures on a grid are vectors of per-cell masses that sum to one. A
// basis carries an inner-product weight per grid cell, chosen so that a
// partition of the grid into d2 equal blocks has identity Gram matrix; the
// fine one-hot basis therefore has G = I and the eta update reduces to the
// tabular rule M <- M - alpha (M - delta_{s'}).

#ifndef MFG_LFA_H_
#define MFG_LFA_H_

#include <span>
#include <vector>

#include "mfg/core.h"

namespace mfg {

struct SparseEntry {
  int index;
  double value;
};

// phi(s, a) as a sparse vector of dimension d1 with ||phi(s, a)||_2 <= 1.
class FeatureMap {
 public:
  // table[s * num_actions + a] holds the nonzero entries of phi(s, a).
  FeatureMap(int dim, int num_states, int num_actions,
             std::vector<std::vector<SparseEntry>> table);

  int dim() const { return dim_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  bool is_one_hot() const { return one_hot_; }

  std::span<const SparseEntry> evaluate(int s, int a) const {
    return table_[static_cast<std::size_t>(s) * num_actions_ + a];
  }
  Vector dense(int s, int a) const;
  double dot(int s, int a, std::span<const double> theta) const;

 private:
  int dim_;
  int num_states_;
  int num_actions_;
  bool one_hot_ = false;
  std::vector<std::vector<SparseEntry>> table_;
};

// phi(s, a) = e_{s * |A| + a}.
FeatureMap one_hot_feature_map(const StateSpace& states,
                               const ActionSpace& actions);

// Row-major square matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vector data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  static Matrix Identity(int n);

  double& operator()(int i, int j) {
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  double operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * cols,
            static_cast<std::size_t>(cols)};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// G[i][j] = weight * sum_s masses[i][s] * masses[j][s], symmetrized exactly.
Matrix gram_matrix(const std::vector<Vector>& masses, double weight);

// A family of d2 probability measures over a grid of `grid_size` cells.
class MeasureBasis {
 public:
  // General basis from per-cell masses. Each row is clamped at zero and
  // renormalized; `weight` is the inner-product weight per cell.
  static MeasureBasis FromMasses(std::vector<Vector> masses, double weight);

  int dim() const { return static_cast<int>(masses_.size()); }
  int grid_size() const { return grid_size_; }
  bool is_identity() const { return identity_; }
  // True when <psi, eta> is eta itself (fine one-hot basis).
  bool represents_directly() const {
    return identity_ && block_of_.empty();
  }
  const Matrix& gram() const { return gram_; }
  const std::vector<Vector>& masses() const { return masses_; }
  double norm_bound() const { return norm_bound_; }

  // psi(s') in inner-product units: weight * (masses[i][s'])_i.
  std::span<const double> evaluate(int s) const {
    return {evaluations_.data() + static_cast<std::size_t>(s) * dim(),
            static_cast<std::size_t>(dim())};
  }
  // out = G eta.
  void apply_gram(std::span<const double> eta, std::span<double> out) const;
  // out = <psi, eta>, the represented grid measure.
  void represent(std::span<const double> eta, std::span<double> out) const;
  Vector represent(std::span<const double> eta) const;

 private:
  friend MeasureBasis one_hot_measure_basis(const StateSpace& states);
  friend MeasureBasis coarse_one_hot_basis(const StateSpace& states, int d2);

  MeasureBasis() = default;
  void finalize(double weight);

  int grid_size_ = 0;
  bool identity_ = false;
  // Coarse one-hot: cell -> block index; empty otherwise.
  std::vector<int> block_of_;
  std::vector<Vector> masses_;
  Vector evaluations_;  // grid_size x dim
  Matrix gram_;
  double norm_bound_ = 0.0;
};

// Dirac measure at each state; G = I, F = 1.
MeasureBasis one_hot_measure_basis(const StateSpace& states);

// Tabular representation on d2 contiguous blocks of the grid: psi_i is the
// uniform measure on block i, psi(s') = e_{block(s')}, G = I.
MeasureBasis coarse_one_hot_basis(const StateSpace& states, int d2);

// psi_i(s) = c f_N(0) - f_N(tan((s - s_i) pi)) with f_N the N(0, v) density
// and centers s_i = i / d2, clamped at zero and normalized over the grid.
MeasureBasis tan_normal_basis(const StateSpace& states, int d2, double c,
                              double v);
// Defaults c = 1.2, v = d2 / 2.
MeasureBasis tan_normal_basis(const StateSpace& states, int d2);

// Euclidean projection onto the probability simplex (sort and threshold).
// Throws NumericError on non-finite input.
Vector project_simplex(std::span<const double> v);
void project_simplex_inplace(std::span<double> v);

// Radial projection onto the ball of radius `radius`.
Vector project_ball(std::span<const double> v, double radius);

// phi(s,a) (<phi(s,a) - gamma phi(s',a'), theta> - r), dense.
Vector semi_gradient_theta(std::span<const double> theta,
                           const Observation& obs, const FeatureMap& phi,
                           double gamma);
// The scalar TD error <phi(s,a) - gamma phi(s',a'), theta> - r; the
// semi-gradient is phi(s, a) times this value.
double td_error(std::span<const double> theta, const Observation& obs,
                const FeatureMap& phi, double gamma);

// G eta - psi(s').
Vector semi_gradient_eta(std::span<const double> eta, int s_next,
                         const MeasureBasis& basis);

}  // namespace mfg

#endif  // MFG_LFA_H_
