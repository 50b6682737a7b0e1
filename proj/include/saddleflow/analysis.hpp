#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "saddleflow/flow.hpp"
#include "saddleflow/problem.hpp"

namespace saddleflow {

inline constexpr double kZeroDissipationTol = 1e-8;

// ---------------------------------------------------------------------------
// Monotonicity of the saddle field

// gap = <z - zh, F(z) - F(zh)> and its decomposition gap = -(m1 + m2 + m3):
// m1 from the convexity of f, m2 from the augmentation term, m3 from the
// convexity of the constraints. projected_gap replaces F with the projected
// field; it never exceeds gap.
struct MonotonicityReport {
  double gap = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double projected_gap = 0.0;
};

// The decomposition is derived for unit time constants; other values are
// rejected rather than silently rescaled.
inline MonotonicityReport monotonicity_gap(const Problem& p, const State& z, const State& zh) {
  p.require_state(z);
  p.require_state(zh);
  if (std::abs(p.tau_x() - 1.0) > 1e-12 || std::abs(p.tau_mu() - 1.0) > 1e-12)
    throw std::invalid_argument("monotonicity_gap: requires unit time constants");

  const Vector dz = z.stacked() - zh.stacked();
  MonotonicityReport rep;
  rep.gap = dz.dot(saddle_field(p, z) - saddle_field(p, zh));
  rep.projected_gap = dz.dot(projected_field(p, z) - projected_field(p, zh));

  const Vector dx = z.x - zh.x;
  rep.m1 = dx.dot(p.objective().gradient(z.x) - p.objective().gradient(zh.x));

  const Vector g = p.constraint_values(z.x);
  const Vector gh = p.constraint_values(zh.x);
  const Matrix J = p.constraint_jacobian(z.x);
  const Matrix Jh = p.constraint_jacobian(zh.x);
  rep.m2 = p.rho() * dx.dot(J.transpose() * g.cwiseMax(0.0)) -
           p.rho() * dx.dot(Jh.transpose() * gh.cwiseMax(0.0));
  rep.m3 = dx.dot(J.transpose() * z.mu - Jh.transpose() * zh.mu) - (z.mu - zh.mu).dot(g - gh);
  return rep;
}

// ---------------------------------------------------------------------------
// Dissipation relative to a solution

// <z - z_star, [F(z)]>. Nonpositive whenever z_star is a solution; a positive
// value beyond rounding indicates a projection or gradient bug and is raised.
inline double dissipation(const Problem& p, const State& z, const State& z_star) {
  p.require_state(z);
  p.require_state(z_star);
  const Vector dz = z.stacked() - z_star.stacked();
  const Vector pf = projected_field(p, z);
  const double value = dz.dot(pf);
  const double guard = 1e-10 + 1e-14 * dz.norm() * pf.norm();
  if (value > guard)
    throw NumericsError("dissipation: positive value " + std::to_string(value) +
                        " against a certified solution");
  return value;
}

// ---------------------------------------------------------------------------
// Zero-dissipation set characterization

// Item-by-item report of the structural conditions that must hold on the
// zero-dissipation set around cert.z_star. The defect scalars are zero (to
// rounding) exactly when the corresponding identity holds.
struct ZeroDissipationReport {
  bool in_feasible_set = false;                // (i)
  double grad_f_match = 0.0;                   // (ii)  ||grad f(x) - grad f(x*)||
  std::vector<double> linearization_defects;   // (iii) per constraint
  double grad_g_mu_match = 0.0;                // (iv)  ||J(x)'mu - J(x*)'mu||
  bool inactive_duals_zero = false;            // (v)
  bool strict_comp_implication = false;        // (vi)
  bool strict_comp_applicable = false;         // (vi) evaluated at all

  double max_defect() const {
    double d = grad_f_match;
    for (double v : linearization_defects) d = std::max(d, v);
    return std::max(d, grad_g_mu_match);
  }
};

// The caller asserts membership in the zero-dissipation set; a dissipative
// point is a precondition error. The mu > 0 disjunct of item (vi) is decided
// against exact zero (duals are clamped exactly), the g >= 0 disjunct at tol.
inline ZeroDissipationReport zero_dissipation_checks(const Problem& p, const State& z,
                                                     const SolutionCertificate& cert,
                                                     double tol = kStrictCompTol) {
  p.require_state(z);
  const Vector dz = z.stacked() - cert.z_star.stacked();
  const double diss = dz.dot(projected_field(p, z));
  if (std::abs(diss) > kZeroDissipationTol)
    throw std::invalid_argument("zero_dissipation_checks: point is dissipative (" +
                                std::to_string(diss) + ")");

  const Vector g = p.constraint_values(z.x);
  const Vector gs = p.constraint_values(cert.z_star.x);
  const Matrix J = p.constraint_jacobian(z.x);
  const Matrix Js = p.constraint_jacobian(cert.z_star.x);

  ZeroDissipationReport rep;
  rep.in_feasible_set = p.hard_set().membership_residual(z.x) <= tol &&
                        (p.m() == 0 || g.maxCoeff() <= tol);
  rep.grad_f_match =
      (p.objective().gradient(z.x) - p.objective().gradient(cert.z_star.x)).norm();
  rep.linearization_defects.resize(static_cast<std::size_t>(p.m()));
  for (Index i = 0; i < p.m(); ++i) {
    if (cert.z_star.mu[i] <= tol) {
      rep.linearization_defects[static_cast<std::size_t>(i)] = 0.0;  // first disjunct holds
    } else {
      const double lin = gs[i] + Js.row(i).dot(z.x - cert.z_star.x);
      rep.linearization_defects[static_cast<std::size_t>(i)] = std::abs(g[i] - lin);
    }
  }
  rep.grad_g_mu_match = (J.transpose() * z.mu - Js.transpose() * z.mu).norm();
  rep.inactive_duals_zero = true;
  for (Index i = 0; i < p.m(); ++i) {
    if (gs[i] < -tol && z.mu[i] > tol) rep.inactive_duals_zero = false;
  }
  rep.strict_comp_applicable = cert.strict_complementarity;
  rep.strict_comp_implication = true;
  if (rep.strict_comp_applicable) {
    for (Index i = 0; i < p.m(); ++i) {
      if (std::abs(gs[i]) <= tol && !(z.mu[i] > 1e-12 || g[i] >= -tol))
        rep.strict_comp_implication = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hamiltonian reduction on the zero-dissipation set

// Linear skew system dx = -A' mu_I - c, dmu_I = A x - d governing the flow on
// the zero-dissipation set when X is the whole space. A stacks the active
// constraint gradients at x* as rows; c = grad f(x*), d = A x*. The SVD
// A = U diag(sigma) V' (U: k x k, V: n x n) diagonalizes the oscillation.
struct HamiltonianSystem {
  Matrix A;
  Vector c;
  Vector d;
  std::vector<Index> active_indices;
  Matrix U;
  Vector sigma;
  Matrix V;
  State center;  // full solution state (x*, mu*)

  Index k() const { return A.rows(); }
  Index n() const { return A.cols(); }

  // Reduced right-hand side at (x, mu_active), stacked as (dx, dmu_active).
  Vector rhs(const Vector& x, const Vector& mu_active) const {
    Vector out(n() + k());
    out.head(n()) = -A.transpose() * mu_active - c;
    out.tail(k()) = A * x - d;
    return out;
  }
};

namespace detail {

inline HamiltonianSystem assemble_hamiltonian(Matrix A, Vector c, Vector d,
                                              std::vector<Index> active, State center) {
  HamiltonianSystem sys;
  sys.A = std::move(A);
  sys.c = std::move(c);
  sys.d = std::move(d);
  sys.active_indices = std::move(active);
  sys.center = std::move(center);
  const Index k = sys.A.rows();
  const Index n = sys.A.cols();
  if (k == 0) {
    sys.U = Matrix::Zero(0, 0);
    sys.sigma = Vector::Zero(0);
    sys.V = Matrix::Identity(n, n);
    return sys;
  }
  if (k > n)
    throw NumericsError("hamiltonian reduction: more active constraints than variables");
  Eigen::JacobiSVD<Matrix> svd(sys.A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  sys.U = svd.matrixU();
  sys.V = svd.matrixV();
  sys.sigma = svd.singularValues();
  if (sys.sigma.minCoeff() <= 1e-10)
    throw NumericsError("hamiltonian reduction: rank-deficient active constraint gradients");
  return sys;
}

}  // namespace detail

// Builds a standalone reduced system with every dual component treated as
// active and the offsets chosen so that `center` is its equilibrium.
inline HamiltonianSystem make_hamiltonian_system(Matrix A, State center) {
  if (A.rows() != center.mu.size() || A.cols() != center.x.size())
    throw std::invalid_argument("make_hamiltonian_system: dimension mismatch");
  std::vector<Index> active(static_cast<std::size_t>(A.rows()));
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<Index>(i);
  const Vector c = -A.transpose() * center.mu;
  const Vector d = A * center.x;
  return detail::assemble_hamiltonian(std::move(A), c, d, std::move(active), std::move(center));
}

// Requires X = R^n and a strictly complementary solution; anything else is
// refused with a diagnostic rather than approximated.
inline HamiltonianSystem hamiltonian_reduction(const Problem& p, const SolutionCertificate& cert,
                                               double active_tol = kCertTol) {
  p.require_state(cert.z_star);
  if (p.hard_set().kind() != ConvexSet::Kind::WholeSpace)
    throw std::invalid_argument("hamiltonian_reduction: unsupported hard set (requires X = R^n)");
  if (!cert.strict_complementarity)
    throw std::invalid_argument(
        "hamiltonian_reduction: solution lacks strict complementary slackness");

  const Vector gs = p.constraint_values(cert.z_star.x);
  const Matrix Js = p.constraint_jacobian(cert.z_star.x);
  std::vector<Index> active;
  for (Index i = 0; i < p.m(); ++i)
    if (std::abs(gs[i]) <= active_tol) active.push_back(i);

  Matrix A(static_cast<Index>(active.size()), p.n());
  for (std::size_t r = 0; r < active.size(); ++r) A.row(static_cast<Index>(r)) = Js.row(active[r]);
  const Vector c = p.objective().gradient(cert.z_star.x);
  const Vector d = A * cert.z_star.x;
  return detail::assemble_hamiltonian(std::move(A), c, d, std::move(active), cert.z_star);
}

// Amplitude/phase parameters of the analytic solution through z0:
//   x(t)    = x* + V [beta .* sin(sigma t + phi); gamma]
//   mu_I(t) = mu*_I - U (beta .* cos(sigma t + phi))
struct OrbitParameters {
  Vector beta;
  Vector phi;
  Vector gamma;
};

inline OrbitParameters orbit_parameters(const HamiltonianSystem& sys, const State& z0) {
  if (z0.x.size() != sys.n() || z0.mu.size() != sys.center.mu.size())
    throw std::invalid_argument("orbit_parameters: state dimensions do not match the system");
  for (Index i = 0; i < z0.mu.size(); ++i) {
    const bool active =
        std::find(sys.active_indices.begin(), sys.active_indices.end(), i) !=
        sys.active_indices.end();
    if (!active && std::abs(z0.mu[i]) > kZeroDissipationTol)
      throw std::invalid_argument("orbit_parameters: inactive dual component " +
                                  std::to_string(i) + " is nonzero");
  }
  const Index k = sys.k();
  Vector mu0(k);
  Vector mus(k);
  for (Index r = 0; r < k; ++r) {
    mu0[r] = z0.mu[sys.active_indices[static_cast<std::size_t>(r)]];
    mus[r] = sys.center.mu[sys.active_indices[static_cast<std::size_t>(r)]];
  }
  const Vector p0 = sys.V.transpose() * (z0.x - sys.center.x);
  const Vector q0 = sys.U.transpose() * (mu0 - mus);

  OrbitParameters par;
  par.beta = Vector(k);
  par.phi = Vector(k);
  for (Index i = 0; i < k; ++i) {
    par.beta[i] = std::hypot(p0[i], q0[i]);
    par.phi[i] = par.beta[i] > 0.0 ? std::atan2(p0[i], -q0[i]) : 0.0;
  }
  par.gamma = p0.tail(sys.n() - k);
  return par;
}

// Closed-form state of the reduced system at time t, starting from z0 at t=0.
// Inactive dual components stay at zero.
inline State analytic_orbit(const HamiltonianSystem& sys, const State& z0, double t) {
  const OrbitParameters par = orbit_parameters(sys, z0);
  const Index k = sys.k();
  Vector modes(sys.n());
  Vector cosm(k);
  for (Index i = 0; i < k; ++i) {
    modes[i] = par.beta[i] * std::sin(sys.sigma[i] * t + par.phi[i]);
    cosm[i] = par.beta[i] * std::cos(sys.sigma[i] * t + par.phi[i]);
  }
  modes.tail(sys.n() - k) = par.gamma;

  State out;
  out.x = sys.center.x + sys.V * modes;
  out.mu = Vector::Zero(sys.center.mu.size());
  const Vector mu_act = sys.U * cosm;
  for (Index r = 0; r < k; ++r) {
    const Index i = sys.active_indices[static_cast<std::size_t>(r)];
    out.mu[i] = sys.center.mu[i] - mu_act[r];
  }
  // Self-check: the fit must reproduce the initial state.
  if (t == 0.0) {
    const double err = std::max((out.x - z0.x).norm(), (out.mu - z0.mu).norm());
    if (err > 1e-9 * (1.0 + z0.stacked().norm()))
      throw NumericsError("analytic_orbit: parameter fit residual " + std::to_string(err));
  }
  return out;
}

// Largest gap between the observed discrete derivative of a recorded
// trajectory and the reduced right-hand side, evaluated at segment midpoints
// and restricted to segments whose endpoints are non-dissipative.
struct HamiltonianResidual {
  double max_residual = 0.0;
  std::size_t segments = 0;
};

inline HamiltonianResidual hamiltonian_residual(const HamiltonianSystem& sys,
                                                const Trajectory& traj,
                                                double diss_tol = kZeroDissipationTol) {
  if (traj.dissipation.size() != traj.states.size())
    throw std::invalid_argument("hamiltonian_residual: trajectory lacks reference diagnostics");
  HamiltonianResidual out;
  const Index k = sys.k();
  auto reduce_mu = [&](const State& z) {
    Vector mu(k);
    for (Index r = 0; r < k; ++r) mu[r] = z.mu[sys.active_indices[static_cast<std::size_t>(r)]];
    return mu;
  };
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    if (std::abs(traj.dissipation[i]) > diss_tol || std::abs(traj.dissipation[i + 1]) > diss_tol)
      continue;
    const double dt = traj.times[i + 1] - traj.times[i];
    const State& a = traj.states[i];
    const State& b = traj.states[i + 1];
    const Vector mid_x = 0.5 * (a.x + b.x);
    const Vector mid_mu = 0.5 * (reduce_mu(a) + reduce_mu(b));
    const Vector predicted = sys.rhs(mid_x, mid_mu);
    Vector observed(sys.n() + k);
    observed.head(sys.n()) = (b.x - a.x) / dt;
    observed.tail(k) = (reduce_mu(b) - reduce_mu(a)) / dt;
    out.max_residual = std::max(out.max_residual, (observed - predicted).norm());
    ++out.segments;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Limit-cycle detection

enum class CycleKind { ConvergedToPoint, LimitCycle, Inconclusive };

inline const char* to_string(CycleKind k) {
  switch (k) {
    case CycleKind::ConvergedToPoint:
      return "converged-to-point";
    case CycleKind::LimitCycle:
      return "limit-cycle";
    case CycleKind::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

struct CycleVerdict {
  CycleKind kind = CycleKind::Inconclusive;
  // limit-cycle: mean distance to z_star over the tail; converged-to-point:
  // terminal distance to z_star.
  double radius = 0.0;
  std::optional<double> period_estimate;
  // Deviation of the tail from a constant-radius orbit around z_star.
  double residual_to_analytic_orbit = 0.0;
};

// Classifies the tail (second half) of a trajectory. Convergence is decided
// by the projected-field norm; a limit cycle requires a constant LaSalle
// radius, a field bounded away from zero, and at least three consistent
// returns through a Poincare half-line anchored at z_star in the dominant
// 2-plane of the tail.
inline CycleVerdict detect_cycle(const Trajectory& traj, const State& z_star,
                                 double tol_radius = 5e-3, double tol_return = 1e-2,
                                 double field_tol = 1e-3) {
  CycleVerdict verdict;
  const std::size_t len = traj.states.size();
  if (len < 16) return verdict;
  const std::size_t start = len / 2;
  const std::size_t tail = len - start;

  const Vector zs = z_star.stacked();
  std::vector<double> radius(tail);
  double max_field = 0.0;
  double min_field = kInf;
  for (std::size_t i = 0; i < tail; ++i) {
    radius[i] = (traj.states[start + i].stacked() - zs).norm();
    max_field = std::max(max_field, traj.field_norm[start + i]);
    min_field = std::min(min_field, traj.field_norm[start + i]);
  }

  if (traj.terminal_status == TerminalStatus::Equilibrium || max_field <= field_tol) {
    verdict.kind = CycleKind::ConvergedToPoint;
    verdict.radius = radius.back();
    return verdict;
  }

  double mean_radius = 0.0;
  for (double r : radius) mean_radius += r;
  mean_radius /= static_cast<double>(tail);
  double radius_dev = 0.0;
  for (double r : radius) radius_dev = std::max(radius_dev, std::abs(r - mean_radius));
  verdict.residual_to_analytic_orbit = radius_dev;

  if (min_field < 10.0 * field_tol || radius_dev > tol_radius) return verdict;

  // Dominant 2-plane of the tail via the top singular directions.
  Matrix D(static_cast<Index>(tail), zs.size());
  for (std::size_t i = 0; i < tail; ++i)
    D.row(static_cast<Index>(i)) = (traj.states[start + i].stacked() - zs).transpose();
  Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeThinV);
  if (svd.matrixV().cols() < 2) return verdict;
  const Vector e1 = svd.matrixV().col(0);
  const Vector e2 = svd.matrixV().col(1);

  // Unwrapped phase along the tail.
  std::vector<double> theta(tail);
  for (std::size_t i = 0; i < tail; ++i) {
    const Vector dz = D.row(static_cast<Index>(i)).transpose();
    const double raw = std::atan2(dz.dot(e2), dz.dot(e1));
    if (i == 0) {
      theta[i] = raw;
    } else {
      double delta = raw - std::fmod(theta[i - 1], 2.0 * std::numbers::pi);
      while (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
      while (delta < -std::numbers::pi) delta += 2.0 * std::numbers::pi;
      theta[i] = theta[i - 1] + delta;
    }
  }
  const double winding = theta.back() - theta.front();
  const double direction = winding >= 0.0 ? 1.0 : -1.0;

  // Interpolated returns to the half-line theta == theta[0] (mod 2*pi).
  std::vector<double> cross_times;
  std::vector<Vector> cross_points;
  int j = 1;
  for (std::size_t i = 0; i + 1 < tail; ++i) {
    const double target = theta.front() + direction * 2.0 * std::numbers::pi * j;
    const double a = theta[i];
    const double b = theta[i + 1];
    if ((direction > 0.0 && a < target && b >= target) ||
        (direction < 0.0 && a > target && b <= target)) {
      const double alpha = (target - a) / (b - a);
      const double t0 = traj.times[start + i];
      const double t1 = traj.times[start + i + 1];
      cross_times.push_back(t0 + alpha * (t1 - t0));
      const Vector p0 = traj.states[start + i].stacked();
      const Vector p1 = traj.states[start + i + 1].stacked();
      cross_points.push_back(p0 + alpha * (p1 - p0));
      ++j;
    }
  }
  if (cross_times.size() < 3) return verdict;
  for (std::size_t i = 0; i + 1 < cross_points.size(); ++i) {
    if ((cross_points[i + 1] - cross_points[i]).norm() > tol_return) return verdict;
  }
  double period = 0.0;
  for (std::size_t i = 0; i + 1 < cross_times.size(); ++i)
    period += cross_times[i + 1] - cross_times[i];
  period /= static_cast<double>(cross_times.size() - 1);

  verdict.kind = CycleKind::LimitCycle;
  verdict.radius = mean_radius;
  verdict.period_estimate = period;
  return verdict;
}

}  // namespace saddleflow
