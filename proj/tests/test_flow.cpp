#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "saddleflow/flow.hpp"
#include "saddleflow/oracle.hpp"
#include "support/corpus.hpp"
#include "support/generators.hpp"

using namespace saddleflow;
using corpus::vec;

namespace {

IntegratorConfig config(double h, double T, std::size_t stride = 10) {
  IntegratorConfig cfg;
  cfg.step_size = h;
  cfg.horizon = T;
  cfg.record_stride = stride;
  return cfg;
}

}  // namespace

TEST_CASE("single steps") {
  const Problem p0 = corpus::scalar_max(0.0);
  State z = step(p0, State{vec({0.0}), vec({0.0})}, 0.1);
  CHECK(z.x[0] == Catch::Approx(0.1));
  CHECK(z.mu[0] == 0.0);

  z = step(p0, State{vec({-1.0}), vec({0.0})}, 0.1);
  CHECK(z.x[0] == Catch::Approx(-0.9));
  CHECK(z.mu[0] == 0.0);  // the dual update clamps at the boundary

  const State star = corpus::solution_scalar_max();
  for (double h : {1e-3, 0.1, 2.0}) {
    const State fixed = step(p0, star, h);
    CHECK(fixed.x[0] == star.x[0]);
    CHECK(fixed.mu[0] == star.mu[0]);
  }
}

TEST_CASE("augmented integration converges to the solution") {
  const Problem p1 = corpus::scalar_max(1.0);
  const Trajectory traj = integrate(p1, State{vec({2.0}), vec({2.5})}, config(1e-3, 100.0),
                                    corpus::solution_scalar_max());
  CHECK(traj.terminal_state().distance(corpus::solution_scalar_max()) <= 1e-3);
}

TEST_CASE("unaugmented integration settles on the unit circle") {
  const Problem p0 = corpus::scalar_max(0.0);
  const Trajectory traj = integrate(p0, State{vec({2.0}), vec({2.5})}, config(1e-3, 200.0),
                                    corpus::solution_scalar_max());
  CHECK(traj.terminal_status == TerminalStatus::ReachedHorizon);
  CHECK(traj.terminal_state().distance(corpus::solution_scalar_max()) ==
        Catch::Approx(1.0).margin(5e-3));
}

TEST_CASE("equilibrium start stops early") {
  const Problem p0 = corpus::scalar_max(0.0);
  const Trajectory traj =
      integrate(p0, corpus::solution_scalar_max(), config(1e-3, 200.0));
  CHECK(traj.terminal_status == TerminalStatus::Equilibrium);
  CHECK(traj.times.back() < 1.0);
}

TEST_CASE("trajectories stay viable") {
  SplitMix64 rng(211);
  const std::vector<Problem> cases = {corpus::scalar_max(0.5), corpus::box_qp(1.0),
                                      corpus::orthant_qp(0.0), corpus::vertex2(1.0)};
  for (const Problem& p : cases) {
    const State z0 = gen::random_state(p, rng);
    const Trajectory traj = integrate(p, z0, config(1e-3, 5.0));
    for (const State& z : traj.states) {
      CHECK(p.hard_set().membership_residual(z.x) <= 1e-9);
      if (p.m() > 0) CHECK(z.mu.minCoeff() >= 0.0);  // exact
    }
  }
}

TEST_CASE("lasalle value is monotone against a solution") {
  const Problem p0 = corpus::scalar_max(0.0);
  const IntegratorConfig cfg = config(1e-3, 50.0);
  const Trajectory traj =
      integrate(p0, State{vec({2.0}), vec({2.5})}, cfg, corpus::solution_scalar_max());
  REQUIRE(traj.lasalle.size() == traj.size());
  double slack_per_pair =
      10.0 * cfg.step_size * static_cast<double>(cfg.record_stride);
  double min_drop = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double delta = traj.lasalle[k + 1] - traj.lasalle[k];
    CHECK(delta <= slack_per_pair);
    min_drop = std::min(min_drop, delta);
  }
  CHECK(min_drop < -1e-6);  // strictly decreasing somewhere on this orbit
}

TEST_CASE("schemes agree on the scalar problem") {
  const Problem p0 = corpus::scalar_max(0.0);
  IntegratorConfig euler = config(1e-3, 20.0);
  IntegratorConfig tangent = euler;
  tangent.scheme = Scheme::TangentStep;
  const State z0{vec({2.0}), vec({2.5})};
  const Trajectory a = integrate(p0, z0, euler);
  const Trajectory b = integrate(p0, z0, tangent);
  CHECK(a.terminal_state().distance(b.terminal_state()) <= 10.0 * euler.step_size);
}

TEST_CASE("first-order convergence to the analytic circle") {
  // Deviation of the computed orbit from the invariant circle of radius 1
  // around (0, 1), measured over one period; halving h halves it.
  const Problem p0 = corpus::scalar_max(0.0);
  const State z0{vec({0.0}), vec({0.0})};  // on the circle
  auto sup_radius_error = [&](double h) {
    const Trajectory traj = integrate(p0, z0, config(h, 2.0 * std::numbers::pi, 1),
                                      corpus::solution_scalar_max());
    double worst = 0.0;
    for (double l : traj.lasalle) worst = std::max(worst, std::abs(std::sqrt(l) - 1.0));
    return worst;
  };
  const double e1 = sup_radius_error(2e-3);
  const double e2 = sup_radius_error(1e-3);
  const double e3 = sup_radius_error(5e-4);
  CHECK(e2 / e1 == Catch::Approx(0.5).margin(0.15));
  CHECK(e3 / e2 == Catch::Approx(0.5).margin(0.15));
}

TEST_CASE("lie derivative estimates") {
  const Problem p0 = corpus::scalar_max(0.0);
  const State star = corpus::solution_scalar_max();

  const Trajectory settled = integrate(p0, star, config(1e-3, 1.0), star);
  CHECK(lie_derivative_estimate(settled, 0) == Catch::Approx(0.0).margin(1e-12));

  // Sliding along the negative x-axis: d/dt ||z - z*||^2 = 2x.
  const Trajectory slide = integrate(p0, State{vec({-1.0}), vec({0.0})},
                                     config(1e-3, 0.05, 1), star);
  CHECK(lie_derivative_estimate(slide, 0) == Catch::Approx(-2.0).margin(0.05));

  // Interior circle point: no dissipation.
  const Trajectory circle = integrate(p0, State{vec({0.5}), vec({1.5})},
                                      config(1e-3, 0.05, 1), star);
  CHECK(std::abs(lie_derivative_estimate(circle, 0)) <= 0.05);

  CHECK_THROWS_AS(lie_derivative_estimate(slide, slide.size() - 1), std::out_of_range);
  const Trajectory no_ref = integrate(p0, star, config(1e-3, 0.01, 1));
  CHECK_THROWS_AS(lie_derivative_estimate(no_ref, 0), std::invalid_argument);
}

TEST_CASE("divergent iterations terminate with an error status") {
  // Forward Euler on a contracting quadratic blows up when h is far above the
  // stability limit.
  const Problem quad = corpus::scalar_qp(0.0);
  IntegratorConfig cfg = config(1e3, 1e5, 1);
  cfg.equilibrium_tol = 0.0;
  const Trajectory traj = integrate(quad, State{vec({1.0}), vec({0.0})}, cfg);
  CHECK(traj.terminal_status == TerminalStatus::Error);
  CHECK(traj.error_step.has_value());
}

TEST_CASE("integration validates inputs") {
  const Problem p0 = corpus::scalar_max(0.0);
  IntegratorConfig bad = config(1.0, 0.5);
  CHECK_THROWS_AS(integrate(p0, corpus::solution_scalar_max(), bad), ConfigError);
  CHECK_THROWS_AS(integrate(p0, State{vec({0.0}), vec({-1.0})}, config(1e-3, 1.0)),
                  std::invalid_argument);
}
