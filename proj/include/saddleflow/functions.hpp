#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "saddleflow/core.hpp"

namespace saddleflow {

// Convex quadratic (x'Qx/2 + q'x + c0, Q symmetric PSD) or affine (a'x - b).
// Construction validates symmetry and positive semidefiniteness; eigenvalues
// in [-1e-10, 0) are clipped to zero.
class SmoothConvexFunction {
 public:
  enum class Kind { Quadratic, Affine };

  static SmoothConvexFunction quadratic(Matrix Q, Vector q, double c0) {
    if (Q.rows() != Q.cols()) throw ConfigError("quadratic: Q must be square");
    if (Q.rows() != q.size()) throw ConfigError("quadratic: Q and q dimensions differ");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()))
      throw ConfigError("quadratic: Q is not symmetric");
    Q = 0.5 * (Q + Q.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
    const double min_ev = eig.eigenvalues().minCoeff();
    if (min_ev < -kPsdTol)
      throw ConfigError("quadratic: Q is not positive semidefinite (min eigenvalue " +
                        std::to_string(min_ev) + ")");
    if (min_ev < 0.0) {
      const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
      Q = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    }

    SmoothConvexFunction f;
    f.kind_ = Kind::Quadratic;
    f.Q_ = std::move(Q);
    f.q_ = std::move(q);
    f.c0_ = c0;
    f.strictly_convex_ = min_ev > kPsdTol;
    return f;
  }

  // Value a'x - b.
  static SmoothConvexFunction affine(Vector a, double b) {
    if (a.size() == 0) throw ConfigError("affine: empty coefficient vector");
    SmoothConvexFunction f;
    f.kind_ = Kind::Affine;
    f.q_ = std::move(a);
    f.c0_ = -b;
    f.strictly_convex_ = false;
    return f;
  }

  Kind kind() const { return kind_; }
  Index dim() const { return q_.size(); }
  bool strictly_convex() const { return strictly_convex_; }

  double value(const Vector& x) const {
    require_dim(x);
    if (kind_ == Kind::Affine) return q_.dot(x) + c0_;
    return 0.5 * x.dot(Q_ * x) + q_.dot(x) + c0_;
  }

  Vector gradient(const Vector& x) const {
    require_dim(x);
    if (kind_ == Kind::Affine) return q_;
    return Q_ * x + q_;
  }

  // Zero matrix for affine functions.
  Matrix hessian() const {
    if (kind_ == Kind::Affine) return Matrix::Zero(dim(), dim());
    return Q_;
  }

  const Matrix& quadratic_matrix() const { return Q_; }
  const Vector& linear_coefficients() const { return q_; }
  double constant_term() const { return c0_; }

  // Smallest eigenvalue of the Hessian (0 for affine functions).
  double min_curvature() const {
    if (kind_ == Kind::Affine) return 0.0;
    return Eigen::SelfAdjointEigenSolver<Matrix>(Q_).eigenvalues().minCoeff();
  }

 private:
  void require_dim(const Vector& x) const {
    if (x.size() != dim())
      throw std::invalid_argument("function expects dimension " + std::to_string(dim()) +
                                  ", got " + std::to_string(x.size()));
  }

  Kind kind_ = Kind::Affine;
  Matrix Q_;
  Vector q_;
  double c0_ = 0.0;
  bool strictly_convex_ = false;
};

}  // namespace saddleflow
