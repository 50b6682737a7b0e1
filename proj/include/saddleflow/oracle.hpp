#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "saddleflow/problem.hpp"

namespace saddleflow {

// Ground truth produced by exhaustive active-set enumeration.
struct SolutionSet {
  std::vector<SolutionCertificate> solutions;
  bool enumeration_complete = true;
  std::vector<std::vector<Index>> active_set_per_solution;
  std::vector<std::string> log;

  // Distance from a primal point to the closest enumerated solution.
  double primal_distance(const Vector& x) const {
    double best = kInf;
    for (const SolutionCertificate& c : solutions)
      best = std::min(best, (c.z_star.x - x).norm());
    return best;
  }
};

namespace detail {

struct KktSystem {
  const Problem* problem;
  std::vector<Index> active_g;      // dualized constraints held at equality
  std::vector<Index> active_faces;  // hard-set faces held at equality
  Matrix face_normals;              // one row per active face
  Vector face_offsets;

  Index unknowns() const {
    return problem->n() + static_cast<Index>(active_g.size() + active_faces.size());
  }

  // Residual of stationarity + active equalities at w = (x, lambda, nu).
  Vector residual(const Vector& w) const {
    const Index n = problem->n();
    const Index sg = static_cast<Index>(active_g.size());
    const Index sx = static_cast<Index>(active_faces.size());
    const Vector x = w.head(n);
    Vector r(n + sg + sx);
    Vector stat = problem->objective().gradient(x);
    for (Index i = 0; i < sg; ++i) {
      const auto& gi = problem->constraints()[static_cast<std::size_t>(active_g[i])];
      stat += w[n + i] * gi.gradient(x);
    }
    if (sx > 0) stat += face_normals.transpose() * w.tail(sx);
    r.head(n) = stat;
    for (Index i = 0; i < sg; ++i)
      r[n + i] = problem->constraints()[static_cast<std::size_t>(active_g[i])].value(x);
    if (sx > 0) r.tail(sx) = face_normals * x - face_offsets;
    return r;
  }

  Matrix jacobian(const Vector& w) const {
    const Index n = problem->n();
    const Index sg = static_cast<Index>(active_g.size());
    const Index sx = static_cast<Index>(active_faces.size());
    const Vector x = w.head(n);
    Matrix J = Matrix::Zero(n + sg + sx, n + sg + sx);
    Matrix hess = problem->objective().hessian();
    for (Index i = 0; i < sg; ++i)
      hess += w[n + i] * problem->constraints()[static_cast<std::size_t>(active_g[i])].hessian();
    J.topLeftCorner(n, n) = hess;
    for (Index i = 0; i < sg; ++i) {
      const Vector grad =
          problem->constraints()[static_cast<std::size_t>(active_g[i])].gradient(x);
      J.block(0, n + i, n, 1) = grad;
      J.block(n + i, 0, 1, n) = grad.transpose();
    }
    if (sx > 0) {
      J.block(0, n + sg, n, sx) = face_normals.transpose();
      J.block(n + sg, 0, sx, n) = face_normals;
    }
    return J;
  }

  bool nonlinear() const {
    for (Index i : active_g) {
      if (problem->constraints()[static_cast<std::size_t>(i)].kind() ==
          SmoothConvexFunction::Kind::Quadratic)
        return true;
    }
    return false;
  }
};

struct KktSolve {
  Vector w;
  bool converged = false;
  bool rank_deficient = false;
};

inline KktSolve solve_kkt_subset(const KktSystem& sys, const Vector& seed) {
  KktSolve out;
  Vector w = seed;
  const int max_iter = sys.nonlinear() ? 60 : 2;
  for (int it = 0; it < max_iter; ++it) {
    const Vector r = sys.residual(w);
    const double scale = 1.0 + w.norm();
    if (r.norm() <= 1e-12 * scale) {
      out.w = w;
      out.converged = true;
      return out;
    }
    const Matrix J = sys.jacobian(w);
    const auto cod = J.completeOrthogonalDecomposition();
    if (cod.rank() < sys.unknowns()) out.rank_deficient = true;
    const Vector delta = cod.solve(-r);
    if (!delta.allFinite()) return out;
    w += delta;
  }
  const Vector r = sys.residual(w);
  if (r.norm() <= 1e-12 * (1.0 + w.norm())) {
    out.w = w;
    out.converged = true;
  }
  return out;
}

}  // namespace detail

// Exhaustive KKT enumeration for quadratic/affine problems over polyhedral
// hard sets: every subset of (dualized constraints + hard-set faces) is held
// at equality, the stationarity system is solved, and candidates surviving
// primal/dual feasibility and certificate checks are collected. Singular but
// consistent subsets contribute their minimum-norm representative and mark
// the enumeration incomplete (solution families are not parametrized).
inline SolutionSet enumerate_kkt(const Problem& p) {
  const Index m = p.m();
  const Index faces = p.hard_set().face_count();
  const Index total = m + faces;
  if (total > kKktEnumMaxConstraints)
    throw ConfigError("enumerate_kkt: " + std::to_string(total) +
                      " constraints exceeds the enumeration budget of " +
                      std::to_string(kKktEnumMaxConstraints));

  SolutionSet out;
  std::vector<State> accepted;

  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    detail::KktSystem sys;
    sys.problem = &p;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) sys.active_g.push_back(i);
    for (Index j = 0; j < faces; ++j)
      if (mask & (1u << (m + j))) sys.active_faces.push_back(j);
    const Index sx = static_cast<Index>(sys.active_faces.size());
    sys.face_normals = Matrix(sx, p.n());
    sys.face_offsets = Vector(sx);
    for (Index r = 0; r < sx; ++r) {
      sys.face_normals.row(r) = p.hard_set().face_normal(sys.active_faces[r]).transpose();
      sys.face_offsets[r] = p.hard_set().face_offset(sys.active_faces[r]);
    }

    std::vector<Vector> seeds;
    seeds.push_back(Vector::Zero(sys.unknowns()));
    if (sys.nonlinear()) {
      Vector up = Vector::Zero(sys.unknowns());
      up.head(p.n()).setConstant(0.5);
      Vector down = Vector::Zero(sys.unknowns());
      down.head(p.n()).setConstant(-0.5);
      seeds.push_back(up);
      seeds.push_back(down);
    }

    detail::KktSolve solve;
    for (const Vector& seed : seeds) {
      solve = detail::solve_kkt_subset(sys, seed);
      if (solve.converged) break;
    }
    if (!solve.converged) {
      if (sys.nonlinear()) {
        out.enumeration_complete = false;
        out.log.push_back("subset mask " + std::to_string(mask) +
                          ": nonlinear stationarity system did not converge");
      } else {
        out.log.push_back("subset mask " + std::to_string(mask) +
                          ": singular inconsistent system skipped");
      }
      continue;
    }

    const Vector x = solve.w.head(p.n());
    Vector mu = Vector::Zero(m);
    bool dual_ok = true;
    for (std::size_t i = 0; i < sys.active_g.size(); ++i) {
      const double lam = solve.w[p.n() + static_cast<Index>(i)];
      if (lam < -1e-9) dual_ok = false;
      mu[sys.active_g[i]] = std::max(lam, 0.0);
    }
    for (std::size_t j = 0; j < sys.active_faces.size(); ++j) {
      const double nu = solve.w[p.n() + static_cast<Index>(sys.active_g.size() + j)];
      if (nu < -1e-9) dual_ok = false;
    }
    if (!dual_ok) continue;
    if (p.hard_set().membership_residual(x) > 1e-9) continue;
    if (m > 0 && p.constraint_values(x).maxCoeff() > 1e-9) continue;

    const State z{x, mu};
    const SolutionCertificate cert = kkt_certificate(p, z);
    if (cert.max_residual() > 1e-9) continue;

    bool duplicate = false;
    for (const State& s : accepted) {
      if (s.distance(z) <= 1e-7) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;

    if (solve.rank_deficient) {
      out.enumeration_complete = false;
      out.log.push_back("subset mask " + std::to_string(mask) +
                        ": rank-deficient system, reporting minimum-norm representative");
    }
    accepted.push_back(z);
    out.solutions.push_back(cert);
  }

  // Deterministic ordering, independent of the mask that produced a solution.
  std::vector<std::size_t> order(out.solutions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Vector va = out.solutions[a].z_star.stacked();
    const Vector vb = out.solutions[b].z_star.stacked();
    for (Index i = 0; i < va.size(); ++i) {
      if (va[i] != vb[i]) return va[i] < vb[i];
    }
    return false;
  });
  std::vector<SolutionCertificate> sorted;
  sorted.reserve(out.solutions.size());
  for (std::size_t i : order) sorted.push_back(out.solutions[i]);
  out.solutions = std::move(sorted);

  out.active_set_per_solution.clear();
  for (const SolutionCertificate& c : out.solutions) {
    const Vector g = p.constraint_values(c.z_star.x);
    std::vector<Index> act;
    for (Index i = 0; i < m; ++i)
      if (std::abs(g[i]) <= kCertTol) act.push_back(i);
    out.active_set_per_solution.push_back(std::move(act));
  }
  if (out.solutions.empty()) {
    out.log.push_back(
        "no KKT point found: the instance may be unbounded or violate Slater's condition");
  }
  return out;
}

// Max central-difference error across f, every g_i, and the augmented
// Lagrangian gradient in x. States near a constraint kink are rejected
// (the augmentation term is nonsmooth where some g_i vanishes).
inline double finite_diff_gradients(const Problem& p, const State& z, double step = 1e-6) {
  p.require_state(z);
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradients: step must be positive");
  const Vector g = p.constraint_values(z.x);
  for (Index i = 0; i < p.m(); ++i) {
    if (std::abs(g[i]) <= 10.0 * step)
      throw std::invalid_argument("finite_diff_gradients: constraint " + std::to_string(i) +
                                  " is within 10*step of its kink");
  }

  double err = 0.0;
  auto central = [&](auto&& value, const Vector& analytic) {
    for (Index j = 0; j < p.n(); ++j) {
      Vector xp = z.x;
      Vector xm = z.x;
      xp[j] += step;
      xm[j] -= step;
      const double fd = (value(xp) - value(xm)) / (2.0 * step);
      err = std::max(err, std::abs(fd - analytic[j]));
    }
  };

  central([&](const Vector& x) { return p.objective().value(x); },
          p.objective().gradient(z.x));
  for (Index i = 0; i < p.m(); ++i) {
    const auto& gi = p.constraints()[static_cast<std::size_t>(i)];
    central([&](const Vector& x) { return gi.value(x); }, gi.gradient(z.x));
  }
  central([&](const Vector& x) { return eval_lagrangian(p, State{x, z.mu}); },
          grad_lagrangian(p, z).dx);
  return err;
}

}  // namespace saddleflow
