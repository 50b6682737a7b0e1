#pragma once

#include <string>
#include <utility>
#include <vector>

#include "saddleflow/functions.hpp"
#include "saddleflow/sets.hpp"

namespace saddleflow {

// Primal-dual pair z = (x, mu) on Z = X x R^m_{>=0}.
struct State {
  Vector x;
  Vector mu;

  Vector stacked() const {
    Vector z(x.size() + mu.size());
    z << x, mu;
    return z;
  }

  static State from_stacked(const Vector& z, Index n) {
    return State{z.head(n), z.tail(z.size() - n)};
  }

  double distance(const State& other) const {
    return std::sqrt((x - other.x).squaredNorm() + (mu - other.mu).squaredNorm());
  }
};

// min f(x) s.t. g(x) <= 0, x in X. The inequality constraints are dualized;
// X is enforced at every step. rho is the augmentation weight, tau_x/tau_mu
// the primal/dual time constants.
class Problem {
 public:
  Problem(SmoothConvexFunction objective, std::vector<SmoothConvexFunction> constraints,
          ConvexSet hard_set, double rho = 0.0, double tau_x = 1.0, double tau_mu = 1.0)
      : objective_(std::move(objective)),
        constraints_(std::move(constraints)),
        hard_set_(std::move(hard_set)),
        rho_(rho),
        tau_x_(tau_x),
        tau_mu_(tau_mu) {
    if (hard_set_.dim() != objective_.dim())
      throw ConfigError("problem: hard set dimension does not match the objective");
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      if (constraints_[i].dim() != objective_.dim())
        throw ConfigError("problem: constraint " + std::to_string(i) + " has dimension " +
                          std::to_string(constraints_[i].dim()) + ", expected " +
                          std::to_string(objective_.dim()));
    }
    if (!(rho_ >= 0.0)) throw ConfigError("problem: rho must be nonnegative");
    if (!(tau_x_ > 0.0) || !(tau_mu_ > 0.0))
      throw ConfigError("problem: time constants must be positive");
  }

  Index n() const { return objective_.dim(); }
  Index m() const { return static_cast<Index>(constraints_.size()); }
  const SmoothConvexFunction& objective() const { return objective_; }
  const std::vector<SmoothConvexFunction>& constraints() const { return constraints_; }
  const ConvexSet& hard_set() const { return hard_set_; }
  double rho() const { return rho_; }
  double tau_x() const { return tau_x_; }
  double tau_mu() const { return tau_mu_; }

  Problem with_rho(double rho) const {
    return Problem(objective_, constraints_, hard_set_, rho, tau_x_, tau_mu_);
  }

  Vector constraint_values(const Vector& x) const {
    Vector g(m());
    for (Index i = 0; i < m(); ++i) g[i] = constraints_[static_cast<std::size_t>(i)].value(x);
    return g;
  }

  // Rows are the constraint gradients (m x n).
  Matrix constraint_jacobian(const Vector& x) const {
    Matrix J(m(), n());
    for (Index i = 0; i < m(); ++i)
      J.row(i) = constraints_[static_cast<std::size_t>(i)].gradient(x).transpose();
    return J;
  }

  void require_state(const State& z) const {
    if (z.x.size() != n() || z.mu.size() != m())
      throw std::invalid_argument("state dimensions (" + std::to_string(z.x.size()) + ", " +
                                  std::to_string(z.mu.size()) + ") do not match problem (" +
                                  std::to_string(n()) + ", " + std::to_string(m()) + ")");
  }

 private:
  SmoothConvexFunction objective_;
  std::vector<SmoothConvexFunction> constraints_;
  ConvexSet hard_set_;
  double rho_;
  double tau_x_;
  double tau_mu_;
};

// Candidate solution with its KKT residuals.
struct SolutionCertificate {
  State z_star;
  double stationarity_residual = 0.0;
  double feasibility_residual = 0.0;
  double complementarity_residual = 0.0;
  bool strict_complementarity = false;

  double max_residual() const {
    return std::max({stationarity_residual, feasibility_residual, complementarity_residual});
  }
  bool passes(double tol = kCertTol) const { return max_residual() <= tol; }
};

// L(x, mu) = f(x) + mu'g(x) + (rho/2)||max(0, g(x))||^2
inline double eval_lagrangian(const Problem& p, const State& z) {
  p.require_state(z);
  const Vector g = p.constraint_values(z.x);
  const Vector gplus = g.cwiseMax(0.0);
  return p.objective().value(z.x) + z.mu.dot(g) + 0.5 * p.rho() * gplus.squaredNorm();
}

struct LagrangianGradient {
  Vector dx;   // gradient of L in x
  Vector dmu;  // gradient of L in mu (= g(x))
};

inline LagrangianGradient grad_lagrangian(const Problem& p, const State& z) {
  p.require_state(z);
  const Vector g = p.constraint_values(z.x);
  const Matrix J = p.constraint_jacobian(z.x);
  const Vector weights = z.mu + p.rho() * g.cwiseMax(0.0);
  return {p.objective().gradient(z.x) + J.transpose() * weights, g};
}

// Unprojected field F(z) = (-grad_x L / tau_x, +grad_mu L / tau_mu), stacked.
inline Vector saddle_field(const Problem& p, const State& z) {
  const LagrangianGradient grad = grad_lagrangian(p, z);
  Vector field(p.n() + p.m());
  field.head(p.n()) = -grad.dx / p.tau_x();
  field.tail(p.m()) = grad.dmu / p.tau_mu();
  return field;
}

// F(z) projected onto the tangent cone of Z = X x R^m_{>=0} at z. The product
// structure splits into the X factor and m scalar clamps: a dual rate is
// clipped at zero only where mu_i sits on the boundary.
inline Vector projected_field(const Problem& p, const State& z, double eps_act = kActiveTol) {
  Vector field = saddle_field(p, z);
  Vector out(field.size());
  out.head(p.n()) = tangent_cone_project(p.hard_set(), z.x, field.head(p.n()), eps_act);
  for (Index i = 0; i < p.m(); ++i) {
    const double rate = field[p.n() + i];
    out[p.n() + i] = (z.mu[i] <= eps_act) ? std::max(rate, 0.0) : rate;
  }
  return out;
}

// KKT residuals of the original problem (the augmentation term plays no role:
// it vanishes on the feasible set where the conditions are decided).
// Stationarity is the distance of -grad f - J' mu to the normal cone at x.
// Requires mu >= 0; the strict-complementarity flag asks every constraint
// active within strict_tol to carry a multiplier above strict_tol.
inline SolutionCertificate kkt_certificate(const Problem& p, const State& z,
                                           double strict_tol = kStrictCompTol) {
  p.require_state(z);
  if (p.m() > 0 && z.mu.minCoeff() < 0.0)
    throw std::invalid_argument("kkt_certificate: negative dual variable");
  const Vector g = p.constraint_values(z.x);
  const Matrix J = p.constraint_jacobian(z.x);
  const Vector eta = -(p.objective().gradient(z.x) + J.transpose() * z.mu);

  SolutionCertificate cert;
  cert.z_star = z;
  cert.stationarity_residual = normal_cone_distance(p.hard_set(), z.x, eta);
  cert.feasibility_residual = p.hard_set().membership_residual(z.x) +
                              (p.m() > 0 ? g.cwiseMax(0.0).maxCoeff() : 0.0);
  double comp = 0.0;
  for (Index i = 0; i < p.m(); ++i) comp = std::max(comp, z.mu[i] * std::abs(g[i]));
  cert.complementarity_residual = comp;
  bool strict = true;
  for (Index i = 0; i < p.m(); ++i) {
    if (std::abs(g[i]) <= strict_tol && z.mu[i] <= strict_tol) strict = false;
  }
  cert.strict_complementarity = strict;
  return cert;
}

inline bool is_equilibrium(const Problem& p, const State& z, double tol = kCertTol) {
  return projected_field(p, z).norm() <= tol;
}

}  // namespace saddleflow
