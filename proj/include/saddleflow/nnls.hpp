#pragma once

#include <vector>

#include "saddleflow/core.hpp"

namespace saddleflow {

struct NnlsResult {
  Vector coefficients;  // lambda >= 0
  double residual;      // ||A*lambda - y||
  bool converged;
};

// Lawson-Hanson active-set solver for min ||A*lambda - y|| s.t. lambda >= 0.
// Deterministic: ties in the entering-index selection break toward the
// smallest index. Sized for desk-scale systems (tens of columns).
inline NnlsResult nnls(const Matrix& A, const Vector& y, double tol = 1e-12) {
  const Index n = A.cols();
  Vector lambda = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);

  auto solve_passive = [&](const std::vector<bool>& mask) -> Vector {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(j)]) cols.push_back(j);
    Vector s = Vector::Zero(n);
    if (cols.empty()) return s;
    Matrix Ap(A.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) Ap.col(static_cast<Index>(k)) = A.col(cols[k]);
    const Vector sp = Ap.completeOrthogonalDecomposition().solve(y);
    for (std::size_t k = 0; k < cols.size(); ++k) s[cols[k]] = sp[static_cast<Index>(k)];
    return s;
  };

  const double scale = 1.0 + y.norm();
  const int max_outer = static_cast<int>(3 * n + 12);
  for (int outer = 0; outer < max_outer; ++outer) {
    const Vector w = A.transpose() * (y - A * lambda);
    Index enter = -1;
    double best = tol * scale;
    for (Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best) {
        best = w[j];
        enter = j;
      }
    }
    if (enter < 0) {
      return {lambda, (A * lambda - y).norm(), true};
    }
    passive[static_cast<std::size_t>(enter)] = true;

    Vector s = solve_passive(passive);
    int inner_guard = static_cast<int>(2 * n + 8);
    while (inner_guard-- > 0) {
      double min_passive = kInf;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) min_passive = std::min(min_passive, s[j]);
      if (min_passive > 0.0) break;
      // Step toward s until the first passive coefficient hits zero.
      double alpha = 1.0;
      Index drop = -1;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          const double denom = lambda[j] - s[j];
          const double a = denom > 0.0 ? lambda[j] / denom : 0.0;
          if (a < alpha) {
            alpha = a;
            drop = j;
          }
        }
      }
      lambda += alpha * (s - lambda);
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && (j == drop || lambda[j] <= 0.0)) {
          lambda[j] = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
      s = solve_passive(passive);
    }
    lambda = s;
    for (Index j = 0; j < n; ++j)
      if (lambda[j] < 0.0) lambda[j] = 0.0;
  }
  return {lambda, (A * lambda - y).norm(), false};
}

}  // namespace saddleflow
