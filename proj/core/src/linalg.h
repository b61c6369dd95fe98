// Small dense linear-algebra helpers used by the metrics module.

#ifndef MFG_SRC_LINALG_H_
#define MFG_SRC_LINALG_H_

#include <optional>

#include "mfg/lfa.h"

namespace mfg::detail {

// Solves A x = b by Gaussian elimination with partial pivoting. Returns
// nullopt when a pivot falls below `singular_tol` times the largest
// absolute entry of A.
std::optional<Vector> solve_linear(Matrix a, Vector b,
                                   double singular_tol = 1e-12);

// c = a * b for square matrices.
Matrix multiply(const Matrix& a, const Matrix& b);

}  // namespace mfg::detail

#endif  // MFG_SRC_LINALG_H_
