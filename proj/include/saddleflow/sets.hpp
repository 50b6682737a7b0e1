#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "saddleflow/core.hpp"
#include "saddleflow/nnls.hpp"

namespace saddleflow {

// Closed convex sets with a polyhedral face description. Every kind is
// represented as {x | <a_i, x> <= b_i} for a finite list of faces (empty for
// the whole space); boxes enumerate their finite lower faces first, then the
// finite upper faces, both in coordinate order. Product sets concatenate the
// face lists of their factors.
class ConvexSet {
 public:
  enum class Kind { WholeSpace, NonnegOrthant, Box, HalfspaceIntersection, Product };

  static ConvexSet whole_space(Index dim) {
    ConvexSet s;
    s.kind_ = Kind::WholeSpace;
    s.dim_ = check_dim(dim);
    return s;
  }

  static ConvexSet nonneg_orthant(Index dim) {
    ConvexSet s;
    s.kind_ = Kind::NonnegOrthant;
    s.dim_ = check_dim(dim);
    return s;
  }

  static ConvexSet box(Vector lower, Vector upper) {
    if (lower.size() != upper.size()) throw ConfigError("box: bound dimensions differ");
    for (Index i = 0; i < lower.size(); ++i) {
      if (std::isnan(lower[i]) || std::isnan(upper[i]))
        throw ConfigError("box: NaN bound at coordinate " + std::to_string(i));
      if (lower[i] > upper[i])
        throw ConfigError("box: empty (lower > upper) at coordinate " + std::to_string(i));
      if (lower[i] == kInf || upper[i] == -kInf)
        throw ConfigError("box: empty bound at coordinate " + std::to_string(i));
    }
    ConvexSet s;
    s.kind_ = Kind::Box;
    s.dim_ = check_dim(lower.size());
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
  }

  // {x | Ax <= b}; rows must be nonzero. Emptiness is not detected here.
  static ConvexSet halfspace_intersection(Matrix A, Vector b) {
    if (A.rows() != b.size()) throw ConfigError("halfspace-intersection: A rows != b size");
    if (A.rows() == 0) throw ConfigError("halfspace-intersection: needs at least one row");
    for (Index i = 0; i < A.rows(); ++i) {
      if (A.row(i).norm() == 0.0)
        throw ConfigError("halfspace-intersection: zero row " + std::to_string(i));
    }
    ConvexSet s;
    s.kind_ = Kind::HalfspaceIntersection;
    s.dim_ = check_dim(A.cols());
    s.A_ = std::move(A);
    s.b_ = std::move(b);
    return s;
  }

  static ConvexSet product(std::vector<ConvexSet> factors) {
    if (factors.empty()) throw ConfigError("product: needs at least one factor");
    ConvexSet s;
    s.kind_ = Kind::Product;
    s.dim_ = 0;
    for (const ConvexSet& f : factors) s.dim_ += f.dim();
    s.factors_ = std::move(factors);
    return s;
  }

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  const std::vector<ConvexSet>& factors() const { return factors_; }
  const Vector& box_lower() const { return lower_; }
  const Vector& box_upper() const { return upper_; }
  const Matrix& halfspace_matrix() const { return A_; }
  const Vector& halfspace_offset() const { return b_; }

  // Max over faces of max(<a_i,x> - b_i, 0); zero inside the set.
  double membership_residual(const Vector& x) const {
    require_dim(x);
    switch (kind_) {
      case Kind::WholeSpace:
        return 0.0;
      case Kind::NonnegOrthant:
        return std::max(0.0, -x.minCoeff());
      case Kind::Box: {
        double r = 0.0;
        for (Index i = 0; i < dim_; ++i) {
          if (lower_[i] > -kInf) r = std::max(r, lower_[i] - x[i]);
          if (upper_[i] < kInf) r = std::max(r, x[i] - upper_[i]);
        }
        return r;
      }
      case Kind::HalfspaceIntersection:
        return std::max(0.0, (A_ * x - b_).maxCoeff());
      case Kind::Product: {
        double r = 0.0;
        Index off = 0;
        for (const ConvexSet& f : factors_) {
          r = std::max(r, f.membership_residual(x.segment(off, f.dim())));
          off += f.dim();
        }
        return r;
      }
    }
    return 0.0;
  }

  bool contains(const Vector& x, double tol = kMembershipTol) const {
    return membership_residual(x) <= tol;
  }

  Index face_count() const {
    switch (kind_) {
      case Kind::WholeSpace:
        return 0;
      case Kind::NonnegOrthant:
        return dim_;
      case Kind::Box: {
        Index c = 0;
        for (Index i = 0; i < dim_; ++i) c += (lower_[i] > -kInf ? 1 : 0);
        for (Index i = 0; i < dim_; ++i) c += (upper_[i] < kInf ? 1 : 0);
        return c;
      }
      case Kind::HalfspaceIntersection:
        return A_.rows();
      case Kind::Product: {
        Index c = 0;
        for (const ConvexSet& f : factors_) c += f.face_count();
        return c;
      }
    }
    return 0;
  }

  // zeta_i(x) = <a_i, x> - b_i for face i (nonpositive inside).
  double face_residual(const Vector& x, Index face) const {
    require_dim(x);
    switch (kind_) {
      case Kind::WholeSpace:
        break;
      case Kind::NonnegOrthant:
        return -x[face];
      case Kind::Box: {
        const auto [coord, is_upper] = box_face(face);
        return is_upper ? x[coord] - upper_[coord] : lower_[coord] - x[coord];
      }
      case Kind::HalfspaceIntersection:
        return A_.row(face).dot(x) - b_[face];
      case Kind::Product: {
        Index off = 0;
        for (const ConvexSet& f : factors_) {
          if (face < f.face_count()) return f.face_residual(x.segment(off, f.dim()), face);
          face -= f.face_count();
          off += f.dim();
        }
        break;
      }
    }
    throw std::invalid_argument("face index out of range");
  }

  // Offset b_i of face i, so the face constraint reads <a_i, x> <= b_i.
  double face_offset(Index face) const {
    switch (kind_) {
      case Kind::WholeSpace:
        break;
      case Kind::NonnegOrthant:
        return 0.0;
      case Kind::Box: {
        const auto [coord, is_upper] = box_face(face);
        return is_upper ? upper_[coord] : -lower_[coord];
      }
      case Kind::HalfspaceIntersection:
        return b_[face];
      case Kind::Product: {
        for (const ConvexSet& f : factors_) {
          if (face < f.face_count()) return f.face_offset(face);
          face -= f.face_count();
        }
        break;
      }
    }
    throw std::invalid_argument("face index out of range");
  }

  // Outward normal of face i, embedded in the full dimension.
  Vector face_normal(Index face) const {
    switch (kind_) {
      case Kind::WholeSpace:
        break;
      case Kind::NonnegOrthant: {
        Vector a = Vector::Zero(dim_);
        a[face] = -1.0;
        return a;
      }
      case Kind::Box: {
        const auto [coord, is_upper] = box_face(face);
        Vector a = Vector::Zero(dim_);
        a[coord] = is_upper ? 1.0 : -1.0;
        return a;
      }
      case Kind::HalfspaceIntersection:
        return A_.row(face).transpose();
      case Kind::Product: {
        Index off = 0;
        for (const ConvexSet& f : factors_) {
          if (face < f.face_count()) {
            Vector a = Vector::Zero(dim_);
            a.segment(off, f.dim()) = f.face_normal(face);
            return a;
          }
          face -= f.face_count();
          off += f.dim();
        }
        break;
      }
    }
    throw std::invalid_argument("face index out of range");
  }

  std::vector<Index> active_faces(const Vector& x, double eps_act = kActiveTol) const {
    std::vector<Index> act;
    const Index faces = face_count();
    for (Index i = 0; i < faces; ++i) {
      if (std::abs(face_residual(x, i)) <= eps_act) act.push_back(i);
    }
    return act;
  }

  // Rows are the outward normals of the faces active at x.
  Matrix active_normal_rows(const Vector& x, double eps_act = kActiveTol) const {
    const std::vector<Index> act = active_faces(x, eps_act);
    Matrix N(static_cast<Index>(act.size()), dim_);
    for (std::size_t k = 0; k < act.size(); ++k)
      N.row(static_cast<Index>(k)) = face_normal(act[k]).transpose();
    return N;
  }

  void require_dim(const Vector& x) const {
    if (x.size() != dim_)
      throw std::invalid_argument("vector dimension " + std::to_string(x.size()) +
                                  " does not match set dimension " + std::to_string(dim_));
  }

 private:
  static Index check_dim(Index dim) {
    if (dim <= 0) throw ConfigError("set dimension must be positive");
    return dim;
  }

  // face index -> (coordinate, is_upper) for boxes
  std::pair<Index, bool> box_face(Index face) const {
    Index k = face;
    for (Index i = 0; i < dim_; ++i) {
      if (lower_[i] > -kInf) {
        if (k == 0) return {i, false};
        --k;
      }
    }
    for (Index i = 0; i < dim_; ++i) {
      if (upper_[i] < kInf) {
        if (k == 0) return {i, true};
        --k;
      }
    }
    throw std::invalid_argument("face index out of range");
  }

  Kind kind_ = Kind::WholeSpace;
  Index dim_ = 0;
  Vector lower_, upper_;
  Matrix A_;
  Vector b_;
  std::vector<ConvexSet> factors_;
};

struct ActiveIndexSet {
  std::vector<Index> indices;  // sorted ascending, 0-based face indices
  double tolerance = kActiveTol;
};

namespace detail {

// Minimum-norm solution of the equality-constrained projection
// min ||y - x|| s.t. Ax = b; returns the candidate (the system is solved via a
// rank-revealing decomposition, so repeated/dependent rows are fine).
inline Vector equality_projection(const Matrix& A, const Vector& b, const Vector& y) {
  const Matrix gram = A * A.transpose();
  const Vector lam = gram.completeOrthogonalDecomposition().solve(A * y - b);
  return y - A.transpose() * lam;
}

// Exact projection onto {x | Ax <= b} by active-subset enumeration: the
// optimizer's active set is one of the masks, the equality projection on that
// mask reproduces it, and no feasible candidate can beat it. The winner is
// certified against the KKT conditions afterwards.
inline Vector project_polyhedron(const Matrix& A, const Vector& b, const Vector& y,
                                 double eps_act) {
  const Index p = A.rows();
  const double scale = 1.0 + y.norm() + b.cwiseAbs().maxCoeff();
  const double feas_tol = 1e-10 * scale;
  if (((A * y - b).array() <= feas_tol).all()) return y;
  if (p > kProjEnumMaxRows)
    throw NumericsError("polyhedron projection: " + std::to_string(p) +
                        " rows exceeds the enumeration limit");

  Vector best;
  double best_dist = kInf;
  for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
    const int rows = std::popcount(mask);
    Matrix As(rows, A.cols());
    Vector bs(rows);
    int r = 0;
    for (Index i = 0; i < p; ++i) {
      if (mask & (1u << i)) {
        As.row(r) = A.row(i);
        bs[r] = b[i];
        ++r;
      }
    }
    const Vector cand = equality_projection(As, bs, y);
    if ((As * cand - bs).cwiseAbs().maxCoeff() > feas_tol) continue;  // inconsistent subset
    if ((A * cand - b).maxCoeff() > feas_tol) continue;
    const double dist = (cand - y).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = cand;
    }
  }
  if (best.size() == 0)
    throw ConfigError("halfspace-intersection appears empty: no feasible projection candidate");

  // Certify optimality: y - best must lie in the cone of the active rows.
  std::vector<Index> act;
  for (Index i = 0; i < p; ++i)
    if (std::abs(A.row(i).dot(best) - b[i]) <= std::max(eps_act, feas_tol)) act.push_back(i);
  Matrix cols(A.cols(), static_cast<Index>(act.size()));
  for (std::size_t k = 0; k < act.size(); ++k)
    cols.col(static_cast<Index>(k)) = A.row(act[k]).transpose();
  const NnlsResult cert = nnls(cols, y - best);
  if (!cert.converged || cert.residual > 1e-8 * scale)
    throw NumericsError("polyhedron projection failed optimality certification");
  return best;
}

// Exact projection onto the polyhedral cone {w | Nw <= 0} (rows of N are the
// active outward normals). Same enumeration argument as project_polyhedron.
inline Vector project_polyhedral_cone(const Matrix& N, const Vector& v) {
  const Index k = N.rows();
  if (k == 0) return v;
  const double scale = 1.0 + v.norm();
  const double feas_tol = 1e-11 * scale;
  if (((N * v).array() <= feas_tol).all()) return v;
  if (k == 1) {
    const double a2 = N.row(0).squaredNorm();
    const double s = std::max(0.0, N.row(0).dot(v)) / a2;
    return v - s * N.row(0).transpose();
  }
  if (k > kConeEnumMaxRows)
    throw NumericsError("tangent-cone projection: " + std::to_string(k) +
                        " active rows exceeds the enumeration limit");

  Vector best;
  double best_dist = kInf;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    const int rows = std::popcount(mask);
    Matrix Ns(rows, N.cols());
    int r = 0;
    for (Index i = 0; i < k; ++i)
      if (mask & (1u << i)) Ns.row(r++) = N.row(i);
    const Vector cand = equality_projection(Ns, Vector::Zero(rows), v);
    if ((N * cand).maxCoeff() > feas_tol) continue;
    const double dist = (cand - v).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = cand;
    }
  }
  if (best.size() == 0) best = Vector::Zero(v.size());  // cone always contains 0

  std::vector<Index> act;
  for (Index i = 0; i < k; ++i)
    if (std::abs(N.row(i).dot(best)) <= std::max(1e-9, feas_tol)) act.push_back(i);
  Matrix cols(N.cols(), static_cast<Index>(act.size()));
  for (std::size_t j = 0; j < act.size(); ++j)
    cols.col(static_cast<Index>(j)) = N.row(act[j]).transpose();
  const NnlsResult cert = nnls(cols, v - best);
  if (!cert.converged || cert.residual > 1e-8 * scale)
    throw NumericsError("tangent-cone projection failed optimality certification");
  return best;
}

}  // namespace detail

// Euclidean (minimum-distance) projection onto the set.
inline Vector euclidean_project(const ConvexSet& set, const Vector& y) {
  set.require_dim(y);
  switch (set.kind()) {
    case ConvexSet::Kind::WholeSpace:
      return y;
    case ConvexSet::Kind::NonnegOrthant:
      return y.cwiseMax(0.0);
    case ConvexSet::Kind::Box:
      return y.cwiseMax(set.box_lower()).cwiseMin(set.box_upper());
    case ConvexSet::Kind::HalfspaceIntersection:
      return detail::project_polyhedron(set.halfspace_matrix(), set.halfspace_offset(), y,
                                        kActiveTol);
    case ConvexSet::Kind::Product: {
      Vector out(set.dim());
      Index off = 0;
      for (const ConvexSet& f : set.factors()) {
        out.segment(off, f.dim()) = euclidean_project(f, y.segment(off, f.dim()));
        off += f.dim();
      }
      return out;
    }
  }
  return y;
}

// Faces active at x (|zeta_i(x)| <= eps_act), sorted ascending.
inline ActiveIndexSet active_set(const ConvexSet& set, const Vector& x,
                                 double eps_act = kActiveTol) {
  if (set.membership_residual(x) > eps_act)
    throw std::invalid_argument("active_set: point lies outside the set");
  return ActiveIndexSet{set.active_faces(x, eps_act), eps_act};
}

// Projection of v onto the tangent cone of the set at x.
inline Vector tangent_cone_project(const ConvexSet& set, const Vector& x, const Vector& v,
                                   double eps_act = kActiveTol) {
  set.require_dim(x);
  set.require_dim(v);
  if (set.membership_residual(x) > std::max(eps_act, kMembershipTol))
    throw std::invalid_argument("tangent_cone_project: point lies outside the set");
  switch (set.kind()) {
    case ConvexSet::Kind::WholeSpace:
      return v;
    case ConvexSet::Kind::NonnegOrthant: {
      Vector w = v;
      for (Index i = 0; i < set.dim(); ++i)
        if (x[i] <= eps_act) w[i] = std::max(v[i], 0.0);
      return w;
    }
    case ConvexSet::Kind::Box: {
      Vector w = v;
      const Vector& lo = set.box_lower();
      const Vector& hi = set.box_upper();
      for (Index i = 0; i < set.dim(); ++i) {
        if (lo[i] > -kInf && x[i] - lo[i] <= eps_act) w[i] = std::max(w[i], 0.0);
        if (hi[i] < kInf && hi[i] - x[i] <= eps_act) w[i] = std::min(w[i], 0.0);
      }
      return w;
    }
    case ConvexSet::Kind::HalfspaceIntersection:
      return detail::project_polyhedral_cone(set.active_normal_rows(x, eps_act), v);
    case ConvexSet::Kind::Product: {
      Vector w(set.dim());
      Index off = 0;
      for (const ConvexSet& f : set.factors()) {
        w.segment(off, f.dim()) =
            tangent_cone_project(f, x.segment(off, f.dim()), v.segment(off, f.dim()), eps_act);
        off += f.dim();
      }
      return w;
    }
  }
  return v;
}

// True iff eta lies in the normal cone at x: eta = sum lambda_i a_i over the
// active outward normals with lambda >= 0, tested by nonnegative least squares.
inline bool normal_cone_contains(const ConvexSet& set, const Vector& x, const Vector& eta,
                                 double tol, double eps_act = kActiveTol) {
  set.require_dim(x);
  set.require_dim(eta);
  if (set.membership_residual(x) > std::max(eps_act, kMembershipTol))
    throw std::invalid_argument("normal_cone_contains: point lies outside the set");
  const Matrix N = set.active_normal_rows(x, eps_act);
  if (N.rows() == 0) return eta.norm() <= tol;
  const NnlsResult fit = nnls(N.transpose(), eta);
  return fit.converged && fit.residual <= tol;
}

// Euclidean distance from eta to the normal cone at x. By Moreau's
// decomposition this equals the norm of the tangent-cone projection of eta,
// but it is computed from the normal-cone generator representation.
inline double normal_cone_distance(const ConvexSet& set, const Vector& x, const Vector& eta,
                                   double eps_act = kActiveTol) {
  set.require_dim(x);
  set.require_dim(eta);
  const Matrix N = set.active_normal_rows(x, eps_act);
  if (N.rows() == 0) return eta.norm();
  const NnlsResult fit = nnls(N.transpose(), eta);
  if (!fit.converged) throw NumericsError("normal-cone distance: NNLS did not converge");
  return fit.residual;
}

}  // namespace saddleflow
