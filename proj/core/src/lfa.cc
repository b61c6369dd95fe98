#include "mfg/lfa.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace mfg {

FeatureMap::FeatureMap(int dim, int num_states, int num_actions,
                       std::vector<std::vector<SparseEntry>> table)
    : dim_(dim),
      num_states_(num_states),
      num_actions_(num_actions),
      table_(std::move(table)) {
  if (static_cast<long>(table_.size()) !=
      static_cast<long>(num_states) * num_actions) {
    throw ConfigError("FeatureMap: table must have |S| * |A| rows");
  }
  bool one_hot = true;
  for (std::size_t k = 0; k < table_.size(); ++k) {
    double sq = 0.0;
    for (const SparseEntry& e : table_[k]) {
      if (e.index < 0 || e.index >= dim_) {
        throw ConfigError("FeatureMap: feature index out of range");
      }
      sq += e.value * e.value;
    }
    if (std::sqrt(sq) > 1.0 + 1e-12) {
      throw ConfigError("FeatureMap: ||phi(s,a)||_2 exceeds 1 at row " +
                        std::to_string(k));
    }
    one_hot = one_hot && table_[k].size() == 1 &&
              table_[k][0].index == static_cast<int>(k) &&
              table_[k][0].value == 1.0;
  }
  one_hot_ = one_hot && static_cast<std::size_t>(dim_) == table_.size();
}

Vector FeatureMap::dense(int s, int a) const {
  Vector out(dim_, 0.0);
  for (const SparseEntry& e : evaluate(s, a)) out[e.index] += e.value;
  return out;
}

double FeatureMap::dot(int s, int a, std::span<const double> theta) const {
  double acc = 0.0;
  for (const SparseEntry& e : evaluate(s, a)) acc += e.value * theta[e.index];
  return acc;
}

FeatureMap one_hot_feature_map(const StateSpace& states,
                               const ActionSpace& actions) {
  const int n = states.size() * actions.size();
  std::vector<std::vector<SparseEntry>> table(n);
  for (int k = 0; k < n; ++k) table[k] = {SparseEntry{k, 1.0}};
  return FeatureMap(n, states.size(), actions.size(), std::move(table));
}

Matrix Matrix::Identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix gram_matrix(const std::vector<Vector>& masses, double weight) {
  const int d = static_cast<int>(masses.size());
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      const Vector& a = masses[i];
      const Vector& b = masses[j];
      for (std::size_t s = 0; s < a.size(); ++s) acc += a[s] * b[s];
      g(i, j) = weight * acc;
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (g(i, j) + g(j, i));
      g(i, j) = avg;
      g(j, i) = avg;
    }
  }
  return g;
}

MeasureBasis MeasureBasis::FromMasses(std::vector<Vector> masses,
                                      double weight) {
  if (masses.empty()) throw ConfigError("MeasureBasis: dimension must be >= 1");
  if (!(weight > 0.0)) throw ConfigError("MeasureBasis: weight must be > 0");
  const std::size_t n = masses.front().size();
  if (n == 0) throw ConfigError("MeasureBasis: empty grid");
  for (std::size_t i = 0; i < masses.size(); ++i) {
    Vector& row = masses[i];
    if (row.size() != n) throw ConfigError("MeasureBasis: ragged masses");
    double total = 0.0;
    for (double& x : row) {
      if (!std::isfinite(x)) throw NumericError("MeasureBasis: non-finite mass");
      x = std::max(x, 0.0);
      total += x;
    }
    if (!(total > 0.0)) {
      throw ConfigError("MeasureBasis: basis function " + std::to_string(i) +
                        " is identically zero after clamping");
    }
    for (double& x : row) x /= total;
  }
  MeasureBasis basis;
  basis.grid_size_ = static_cast<int>(n);
  basis.masses_ = std::move(masses);
  basis.finalize(weight);
  return basis;
}

void MeasureBasis::finalize(double weight) {
  const int d = dim();
  evaluations_.assign(static_cast<std::size_t>(grid_size_) * d, 0.0);
  if (identity_) {
    gram_ = Matrix::Identity(d);
    for (int s = 0; s < grid_size_; ++s) {
      const int block = block_of_.empty() ? s : block_of_[s];
      evaluations_[static_cast<std::size_t>(s) * d + block] = 1.0;
    }
    norm_bound_ = 1.0;
    return;
  }
  gram_ = gram_matrix(masses_, weight);
  norm_bound_ = 0.0;
  for (int s = 0; s < grid_size_; ++s) {
    double l1 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double value = weight * masses_[i][s];
      evaluations_[static_cast<std::size_t>(s) * d + i] = value;
      l1 += std::abs(value);
    }
    norm_bound_ = std::max(norm_bound_, l1);
  }
}

void MeasureBasis::apply_gram(std::span<const double> eta,
                              std::span<double> out) const {
  const int d = dim();
  if (identity_) {
    std::copy(eta.begin(), eta.end(), out.begin());
    return;
  }
  for (int i = 0; i < d; ++i) {
    const auto row = gram_.row(i);
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += row[j] * eta[j];
    out[i] = acc;
  }
}

void MeasureBasis::represent(std::span<const double> eta,
                             std::span<double> out) const {
  if (identity_ && block_of_.empty()) {
    std::copy(eta.begin(), eta.end(), out.begin());
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < dim(); ++i) {
    const double w = eta[i];
    if (w == 0.0) continue;
    const Vector& m = masses_[i];
    for (int s = 0; s < grid_size_; ++s) out[s] += w * m[s];
  }
}

Vector MeasureBasis::represent(std::span<const double> eta) const {
  Vector out(grid_size_);
  represent(eta, out);
  return out;
}

MeasureBasis one_hot_measure_basis(const StateSpace& states) {
  const int n = states.size();
  MeasureBasis basis;
  basis.grid_size_ = n;
  basis.identity_ = true;
  basis.masses_.assign(n, Vector(n, 0.0));
  for (int s = 0; s < n; ++s) basis.masses_[s][s] = 1.0;
  basis.finalize(1.0);
  return basis;
}

MeasureBasis coarse_one_hot_basis(const StateSpace& states, int d2) {
  const int n = states.size();
  if (d2 < 1 || d2 > n) {
    throw ConfigError("coarse_one_hot_basis: d2 must lie in [1, |S|]");
  }
  if (d2 == n) return one_hot_measure_basis(states);
  MeasureBasis basis;
  basis.grid_size_ = n;
  basis.identity_ = true;
  basis.block_of_.resize(n);
  std::vector<int> counts(d2, 0);
  for (int s = 0; s < n; ++s) {
    const int block = static_cast<int>(static_cast<long>(s) * d2 / n);
    basis.block_of_[s] = block;
    ++counts[block];
  }
  basis.masses_.assign(d2, Vector(n, 0.0));
  for (int s = 0; s < n; ++s) {
    const int block = basis.block_of_[s];
    basis.masses_[block][s] = 1.0 / counts[block];
  }
  basis.finalize(1.0);
  return basis;
}

MeasureBasis tan_normal_basis(const StateSpace& states, int d2, double c,
                              double v) {
  if (!states.is_grid()) {
    throw ConfigError("tan_normal_basis: requires an interval grid");
  }
  if (d2 < 1) throw ConfigError("tan_normal_basis: d2 must be >= 1");
  if (!(v > 0.0)) throw ConfigError("tan_normal_basis: variance must be > 0");
  const int n = states.size();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * v);
  auto density = [&](double x) { return norm * std::exp(-x * x / (2.0 * v)); };
  std::vector<Vector> masses(d2, Vector(n));
  for (int i = 0; i < d2; ++i) {
    const double center = static_cast<double>(i) / d2;
    for (int s = 0; s < n; ++s) {
      const double x = std::tan((states.coordinate(s) - center) *
                                std::numbers::pi);
      // Cell masses are proportional to the density at the cell point.
      masses[i][s] = c * density(0.0) - density(x);
    }
  }
  return MeasureBasis::FromMasses(std::move(masses),
                                  static_cast<double>(n) / d2);
}

MeasureBasis tan_normal_basis(const StateSpace& states, int d2) {
  return tan_normal_basis(states, d2, 1.2, d2 / 2.0);
}

Vector project_simplex(std::span<const double> v) {
  Vector out(v.begin(), v.end());
  project_simplex_inplace(out);
  return out;
}

void project_simplex_inplace(std::span<double> v) {
  if (v.empty()) throw ConfigError("project_simplex: empty vector");
  double sum = 0.0;
  bool nonneg = true;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError("project_simplex: non-finite input");
    }
    nonneg = nonneg && x >= 0.0;
    sum += x;
  }
  // Points already on the simplex are returned untouched, which makes the
  // projection exactly idempotent.
  if (nonneg && std::abs(sum - 1.0) <= kSimplexTolerance) return;

  Vector u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  for (double& x : v) x = std::max(x - tau, 0.0);
}

Vector project_ball(std::span<const double> v, double radius) {
  if (!(radius > 0.0)) throw ConfigError("project_ball: radius must be > 0");
  Vector out(v.begin(), v.end());
  const double norm = l2_norm(v);
  if (norm > radius) {
    const double scale = radius / norm;
    for (double& x : out) x *= scale;
  }
  return out;
}

double td_error(std::span<const double> theta, const Observation& obs,
                const FeatureMap& phi, double gamma) {
  return phi.dot(obs.s, obs.a, theta) -
         gamma * phi.dot(obs.s_next, obs.a_next, theta) - obs.r;
}

Vector semi_gradient_theta(std::span<const double> theta,
                           const Observation& obs, const FeatureMap& phi,
                           double gamma) {
  const double delta = td_error(theta, obs, phi, gamma);
  Vector g(phi.dim(), 0.0);
  for (const SparseEntry& e : phi.evaluate(obs.s, obs.a)) {
    g[e.index] += e.value * delta;
  }
  return g;
}

Vector semi_gradient_eta(std::span<const double> eta, int s_next,
                         const MeasureBasis& basis) {
  Vector g(basis.dim());
  basis.apply_gram(eta, g);
  const auto psi = basis.evaluate(s_next);
  for (int i = 0; i < basis.dim(); ++i) g[i] -= psi[i];
  return g;
}

}  // namespace mfg
