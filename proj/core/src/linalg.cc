#include "linalg.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mfg::detail {

std::optional<Vector> solve_linear(Matrix a, Vector b, double singular_tol) {
  const int n = a.rows;
  double scale = 0.0;
  for (double x : a.data) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return std::nullopt;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) <= singular_tol * scale) return std::nullopt;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double factor = a(r, col) * inv;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      b[r] -= factor * b[col];
    }
  }
  Vector x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a(r, c) * x[c];
    x[r] = acc / a(r, r);
  }
  return x;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  const int n = a.rows;
  Matrix c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

}  // namespace mfg::detail
