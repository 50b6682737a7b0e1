#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "saddleflow/problem.hpp"

namespace saddleflow {

enum class Scheme { ProjectedEuler, TangentStep };

struct IntegratorConfig {
  double step_size = 1e-3;
  double horizon = 200.0;
  Scheme scheme = Scheme::ProjectedEuler;
  double equilibrium_tol = 1e-8;
  std::size_t record_stride = 10;

  void validate() const {
    if (!(step_size > 0.0)) throw ConfigError("integrator: step size must be positive");
    if (!(horizon > 0.0)) throw ConfigError("integrator: horizon must be positive");
    if (step_size > horizon) throw ConfigError("integrator: step size exceeds horizon");
    if (record_stride == 0) throw ConfigError("integrator: record stride must be positive");
  }
};

enum class TerminalStatus { ReachedHorizon, Equilibrium, Error };

inline const char* to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::ReachedHorizon:
      return "reached-horizon";
    case TerminalStatus::Equilibrium:
      return "equilibrium";
    case TerminalStatus::Error:
      return "error";
  }
  return "error";
}

// Recorded samples of an integration. dissipation[k] = <z_k - z_ref, [F(z_k)]>
// and lasalle[k] = ||z_k - z_ref||^2 are filled only when a reference state
// is supplied; field_norm is always recorded.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> dissipation;
  std::vector<double> lasalle;
  std::vector<double> field_norm;
  TerminalStatus terminal_status = TerminalStatus::ReachedHorizon;
  std::optional<std::size_t> error_step;

  std::size_t size() const { return states.size(); }
  const State& terminal_state() const { return states.back(); }
};

// One discrete step. Projected Euler projects the advanced state back onto Z;
// the tangent-step variant advances along the projected field first. Both land
// in Z exactly (dual variables are clamped at zero).
inline State step(const Problem& p, const State& z, double h,
                  Scheme scheme = Scheme::ProjectedEuler) {
  p.require_state(z);
  if (!(h > 0.0)) throw std::invalid_argument("step: h must be positive");
  const Vector field =
      scheme == Scheme::ProjectedEuler ? saddle_field(p, z) : projected_field(p, z);
  State out;
  out.x = euclidean_project(p.hard_set(), z.x + h * field.head(p.n()));
  out.mu = (z.mu + h * field.tail(p.m())).cwiseMax(0.0);
  return out;
}

// Fixed-step integration over ceil(T/h) steps, recording every record_stride
// steps plus the final state. Stops early once the projected-field norm stays
// below equilibrium_tol for 10 consecutive recorded samples; a non-finite
// state terminates with an error status and the offending step index.
inline Trajectory integrate(const Problem& p, const State& z0, const IntegratorConfig& cfg,
                            const std::optional<State>& z_ref = std::nullopt) {
  p.require_state(z0);
  cfg.validate();
  if (z_ref) p.require_state(*z_ref);
  if (p.hard_set().membership_residual(z0.x) > kMembershipTol ||
      (p.m() > 0 && z0.mu.minCoeff() < 0.0))
    throw std::invalid_argument("integrate: initial state outside Z");

  const std::size_t total_steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.step_size));
  Trajectory traj;
  const std::size_t reserve = total_steps / cfg.record_stride + 2;
  traj.times.reserve(reserve);
  traj.states.reserve(reserve);
  traj.field_norm.reserve(reserve);

  State z = z0;
  int quiet_samples = 0;
  auto record = [&](std::size_t k) -> bool {
    const Vector pf = projected_field(p, z);
    traj.times.push_back(static_cast<double>(k) * cfg.step_size);
    traj.states.push_back(z);
    traj.field_norm.push_back(pf.norm());
    if (z_ref) {
      const Vector dz = z.stacked() - z_ref->stacked();
      traj.dissipation.push_back(dz.dot(pf));
      traj.lasalle.push_back(dz.squaredNorm());
    }
    quiet_samples = traj.field_norm.back() <= cfg.equilibrium_tol ? quiet_samples + 1 : 0;
    return quiet_samples >= 10;
  };

  if (record(0)) {
    traj.terminal_status = TerminalStatus::Equilibrium;
    return traj;
  }
  for (std::size_t k = 1; k <= total_steps; ++k) {
    z = step(p, z, cfg.step_size, cfg.scheme);
    if (!z.x.allFinite() || !z.mu.allFinite()) {
      traj.terminal_status = TerminalStatus::Error;
      traj.error_step = k;
      return traj;
    }
    if (k % cfg.record_stride == 0 || k == total_steps) {
      if (record(k)) {
        traj.terminal_status = TerminalStatus::Equilibrium;
        return traj;
      }
    }
  }
  traj.terminal_status = TerminalStatus::ReachedHorizon;
  return traj;
}

// Forward-difference rate of the LaSalle value between recorded samples.
inline double lie_derivative_estimate(const Trajectory& traj, std::size_t k) {
  if (traj.lasalle.size() != traj.times.size())
    throw std::invalid_argument("lie_derivative_estimate: trajectory has no reference diagnostics");
  if (k + 1 >= traj.times.size())
    throw std::out_of_range("lie_derivative_estimate: index out of range");
  return (traj.lasalle[k + 1] - traj.lasalle[k]) / (traj.times[k + 1] - traj.times[k]);
}

}  // namespace saddleflow
