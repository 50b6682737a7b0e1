#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "saddleflow/saddleflow.hpp"
#include "support/corpus.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace saddleflow;
using corpus::vec;

namespace {

namespace fs = std::filesystem;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool announce(int id, const std::string& label, bool pass, const std::string& detail) {
  std::cout << "[acceptance] criterion " << id << " (" << label
            << "): " << (pass ? "PASS" : "FAIL");
  if (!detail.empty()) std::cout << " [" << detail << "]";
  std::cout << std::endl;
  return pass;
}

IntegratorConfig config(double h, double T, std::size_t stride = 10) {
  IntegratorConfig cfg;
  cfg.step_size = h;
  cfg.horizon = T;
  cfg.record_stride = stride;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("criterion 1: unaugmented flow settles on the unit limit cycle") {
  Stopwatch watch;
  const Problem p = corpus::scalar_max(0.0);
  const State star = corpus::solution_scalar_max();
  const Trajectory traj = integrate(p, State{vec({2.0}), vec({2.5})}, config(1e-3, 400.0), star);
  const CycleVerdict verdict = detect_cycle(traj, star);
  const double elapsed = watch.seconds();

  const double terminal_radius = traj.terminal_state().distance(star);
  const double period = verdict.period_estimate.value_or(0.0);
  const bool pass = verdict.kind == CycleKind::LimitCycle &&
                    std::abs(terminal_radius - 1.0) <= 5e-3 &&
                    std::abs(verdict.radius - 1.0) <= 5e-3 &&
                    std::abs(period - 2.0 * std::numbers::pi) <= 0.02 * 2.0 * std::numbers::pi &&
                    elapsed < 2.0;
  std::ostringstream detail;
  detail << "kind=" << to_string(verdict.kind) << " radius=" << verdict.radius
         << " period=" << period << " terminal_radius=" << terminal_radius << " t=" << elapsed
         << "s";
  REQUIRE(announce(1, "rho=0 limit cycle, radius 1, period 2*pi", pass, detail.str()));
}

TEST_CASE("criterion 2: augmented flow converges to the solution") {
  Stopwatch watch;
  const Problem p = corpus::scalar_max(1.0);
  const State star = corpus::solution_scalar_max();
  const Trajectory traj = integrate(p, State{vec({2.0}), vec({2.5})}, config(1e-3, 400.0), star);
  const CycleVerdict verdict = detect_cycle(traj, star);
  const SolutionCertificate cert = kkt_certificate(p, traj.terminal_state());
  const double elapsed = watch.seconds();

  const double dist = traj.terminal_state().distance(star);
  const bool pass = verdict.kind == CycleKind::ConvergedToPoint && dist <= 1e-3 &&
                    cert.max_residual() <= 1e-5 && elapsed < 2.0;
  std::ostringstream detail;
  detail << "kind=" << to_string(verdict.kind) << " distance=" << dist
         << " max_residual=" << cert.max_residual() << " t=" << elapsed << "s";
  REQUIRE(announce(2, "rho=1 converges to (0,1)", pass, detail.str()));
}

TEST_CASE("criterion 3: interior orbits are non-dissipative over five periods") {
  const Problem p = corpus::scalar_max(0.0);
  const State star = corpus::solution_scalar_max();
  // The criterion does not pin the step; the first-order integrator needs
  // h <= ~3e-5 for the stated 1e-4 LaSalle budget, so run at 1e-5.
  const Trajectory traj = integrate(p, State{vec({0.3}), vec({1.0})},
                                    config(1e-5, 10.0 * std::numbers::pi, 100), star);
  double lo = kInf, hi = -kInf;
  for (double l : traj.lasalle) {
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  const bool pass = traj.terminal_status == TerminalStatus::ReachedHorizon && (hi - lo) <= 1e-4;
  std::ostringstream detail;
  detail << "lasalle_spread=" << (hi - lo) << " samples=" << traj.size();
  REQUIRE(announce(3, "green orbit keeps the LaSalle value constant", pass, detail.str()));
}

TEST_CASE("criterion 4: monotonicity suite over the corpus") {
  Stopwatch watch;
  SplitMix64 rng(9001);
  const std::vector<Problem> problems = corpus::all();
  REQUIRE(problems.size() >= 10);

  // Feasible reference solutions for the strict-dissipation subcase.
  std::vector<State> references;
  for (const Problem& p : problems)
    references.push_back(enumerate_kkt(p).solutions.front().z_star);

  std::size_t violations = 0;
  std::size_t strict_checks = 0;
  std::size_t infeasible_checks = 0;
  const std::size_t samples = 1000;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t which = s % problems.size();
    const double rho = (s % 2) ? 1.0 : 0.0;
    const Problem p = problems[which].with_rho(rho);
    const State z = gen::random_state(p, rng);
    const State zh = gen::random_state(p, rng);
    const MonotonicityReport rep = monotonicity_gap(p, z, zh);

    bool ok = rep.gap <= 1e-10 && std::abs(rep.gap + rep.m1 + rep.m2 + rep.m3) <= 1e-10 &&
              rep.projected_gap <= rep.gap + 1e-10 && rep.m1 >= -1e-10 && rep.m3 >= -1e-10;

    if (p.objective().strictly_convex() && (z.x - zh.x).norm() >= 1e-3) {
      ++strict_checks;
      ok = ok && rep.gap <= -p.objective().min_curvature() * (z.x - zh.x).squaredNorm() + 1e-10;
    }
    if (rho > 0.0 && p.m() > 0 && p.constraint_values(z.x).maxCoeff() >= 1e-3) {
      ++infeasible_checks;
      const MonotonicityReport strict = monotonicity_gap(p, z, State{references[which]});
      ok = ok && strict.gap < -1e-12 && strict.m2 > 0.0;
    }
    if (!ok) ++violations;
  }
  const double elapsed = watch.seconds();
  const bool pass = violations == 0 && strict_checks > 50 && infeasible_checks > 50 &&
                    elapsed < 5.0;
  std::ostringstream detail;
  detail << "samples=" << samples << " violations=" << violations
         << " strict_convex_checks=" << strict_checks
         << " infeasible_checks=" << infeasible_checks << " t=" << elapsed << "s";
  REQUIRE(announce(4, "1000-pair monotonicity sweep", pass, detail.str()));
}

TEST_CASE("criterion 5: Moreau and cone geometry suite") {
  Stopwatch watch;
  SplitMix64 rng(9005);
  std::size_t violations = 0;
  const std::size_t samples = 1000;
  for (std::size_t s = 0; s < samples; ++s) {
    const Index n = 1 + static_cast<Index>(rng.next_u64() % 4);
    const ConvexSet set = gen::random_set(rng, n);
    const Vector x = gen::random_member(set, rng);
    const Vector v = rng.uniform_vector(n, -2.0, 2.0);
    const Vector w = tangent_cone_project(set, x, v);

    bool ok = normal_cone_contains(set, x, v - w, 1e-9) && std::abs(w.dot(v - w)) <= 1e-9;
    for (double eps : {0.5, 4.0}) {
      const Vector scaled = tangent_cone_project(set, x, Vector(eps * v));
      ok = ok && (scaled - eps * w).norm() <= 1e-10 * (1.0 + eps * v.norm());
    }
    ok = ok && (tangent_cone_project(set, x, w) - w).norm() <= 1e-12;

    const Vector y1 = rng.uniform_vector(n, -4.0, 4.0);
    const Vector y2 = rng.uniform_vector(n, -4.0, 4.0);
    ok = ok && (euclidean_project(set, y1) - euclidean_project(set, y2)).norm() <=
                   (y1 - y2).norm() + 1e-12;

    if (set.kind() == ConvexSet::Kind::Product) {
      Vector expected(set.dim());
      Index off = 0;
      for (const ConvexSet& f : set.factors()) {
        expected.segment(off, f.dim()) = euclidean_project(f, y1.segment(off, f.dim()));
        off += f.dim();
      }
      ok = ok && (euclidean_project(set, y1) - expected).norm() == 0.0;
    }
    if (!ok) ++violations;
  }
  const double elapsed = watch.seconds();
  const bool pass = violations == 0 && elapsed < 5.0;
  std::ostringstream detail;
  detail << "samples=" << samples << " violations=" << violations << " t=" << elapsed << "s";
  REQUIRE(announce(5, "1000-sample Moreau/homogeneity/idempotence/nonexpansiveness", pass,
                   detail.str()));
}

TEST_CASE("criterion 6: zero-dissipation characterization") {
  // (ii)-(vi) on the detected cycle of the scalar problem and its
  // two-constraint variant.
  std::size_t checked = 0;
  double worst_defect = 0.0;
  bool booleans_hold = true;

  const auto scan = [&](const Problem& p, const State& z0) {
    const SolutionCertificate cert = enumerate_kkt(p).solutions.front();
    const Trajectory traj = integrate(p, z0, config(1e-3, 400.0), cert.z_star);
    for (std::size_t k = traj.size() / 2; k < traj.size(); ++k) {
      if (std::abs(traj.dissipation[k]) > kZeroDissipationTol) continue;
      const ZeroDissipationReport rep = zero_dissipation_checks(p, traj.states[k], cert);
      worst_defect = std::max(worst_defect, rep.max_defect());
      if (!rep.inactive_duals_zero) booleans_hold = false;
      if (rep.strict_comp_applicable && !rep.strict_comp_implication) booleans_hold = false;
      ++checked;
    }
  };
  scan(corpus::scalar_max(0.0), State{vec({2.0}), vec({2.5})});
  scan(corpus::scalar_max_two(0.0), State{vec({1.5}), vec({2.0, 0.4})});

  // Item (i) with rho = 1: near-zero dissipation forces feasibility. The
  // augmented gap obeys |dissipation| >= (constraint violation)^2, so the
  // 1e-6 feasibility budget corresponds to a 1e-12 dissipation window.
  const Problem p1 = corpus::scalar_max(1.0);
  const SolutionCertificate cert1 = enumerate_kkt(p1).solutions.front();
  const Trajectory spiral =
      integrate(p1, State{vec({2.0}), vec({2.5})}, config(1e-3, 400.0), cert1.z_star);
  std::size_t members = 0;
  bool feasible_hold = true;
  for (std::size_t k = 0; k < spiral.size(); ++k) {
    if (std::abs(spiral.dissipation[k]) > 1e-12) continue;
    ++members;
    const Vector g = p1.constraint_values(spiral.states[k].x);
    if (g.maxCoeff() > 1e-6 ||
        p1.hard_set().membership_residual(spiral.states[k].x) > 1e-6)
      feasible_hold = false;
  }

  const bool pass = checked > 1000 && worst_defect <= 1e-6 && booleans_hold && members > 50 &&
                    feasible_hold;
  std::ostringstream detail;
  detail << "cycle_samples=" << checked << " max_defect=" << worst_defect
         << " items_hold=" << booleans_hold << " rho1_members=" << members
         << " rho1_feasible=" << feasible_hold;
  REQUIRE(announce(6, "Prop-4 items on cycle samples and augmented members", pass, detail.str()));
}

TEST_CASE("criterion 7: Hamiltonian reduction against independent integration") {
  SplitMix64 rng(9007);
  double worst = 0.0;
  int systems = 0;
  while (systems < 20) {
    const Index n = 2 + static_cast<Index>(rng.next_u64() % 3);
    const Index k = 1 + static_cast<Index>(rng.next_u64() % n);
    Matrix A(k, n);
    for (Index r = 0; r < k; ++r) A.row(r) = gen::unit_row(rng, n).transpose();
    if (Eigen::JacobiSVD<Matrix>(A).singularValues().minCoeff() < 0.1) continue;
    ++systems;
    const State center{rng.uniform_vector(n, -1.0, 1.0), rng.uniform_vector(k, 0.5, 2.0)};
    const HamiltonianSystem sys = make_hamiltonian_system(A, center);
    const State z0{center.x + rng.uniform_vector(n, -0.5, 0.5),
                   (center.mu + rng.uniform_vector(k, -0.3, 0.3)).cwiseMax(0.0)};

    auto rhs = [&](const Vector& y) { return sys.rhs(y.head(n), y.tail(k)); };
    Vector y = z0.stacked();
    for (int step_i = 1; step_i <= 20; ++step_i) {
      const double t = 0.25 * step_i;
      y = oracles::rk4_integrate(rhs, y, 0.25, 1e-4);
      const State a = analytic_orbit(sys, z0, t);
      Vector av(n + k);
      av << a.x, a.mu;
      worst = std::max(worst, (av - y).cwiseAbs().maxCoeff());
    }
  }

  // Discrete derivative of the detected cycle vs. the reduced right-hand side.
  const Problem p0 = corpus::scalar_max(0.0);
  const SolutionCertificate cert = kkt_certificate(p0, corpus::solution_scalar_max());
  const HamiltonianSystem sys = hamiltonian_reduction(p0, cert);
  const Trajectory cycle =
      integrate(p0, State{vec({2.0}), vec({2.5})}, config(1e-3, 400.0), cert.z_star);
  const HamiltonianResidual res = hamiltonian_residual(sys, cycle);

  const bool pass = worst <= 1e-6 && res.segments > 1000 && res.max_residual <= 10.0 * 1e-3;
  std::ostringstream detail;
  detail << "rk4_sup_error=" << worst << " cycle_rhs_residual=" << res.max_residual
         << " segments=" << res.segments;
  REQUIRE(announce(7, "analytic orbits vs RK4; cycle follows the reduced dynamics", pass,
                   detail.str()));
}

TEST_CASE("criterion 8: augmentation precludes limit cycles on affine problems") {
  Stopwatch watch;
  SplitMix64 rng(9008);
  bool never_cycles = true;
  bool lands_on_solutions = true;
  int runs = 0;
  for (const Problem& base : corpus::affine_objective()) {
    const Problem p = base.with_rho(1.0);
    const SolutionSet sols = enumerate_kkt(p);
    REQUIRE_FALSE(sols.solutions.empty());
    const State& ref = sols.solutions.front().z_star;
    for (int s = 0; s < 20; ++s) {
      const State z0 = gen::random_state(p, rng);
      const Trajectory traj = integrate(p, z0, config(1e-3, 300.0), ref);
      const CycleVerdict verdict = detect_cycle(traj, ref);
      if (verdict.kind == CycleKind::LimitCycle) never_cycles = false;
      if (sols.primal_distance(traj.terminal_state().x) > 1e-4) lands_on_solutions = false;
      ++runs;
    }
  }
  const double elapsed = watch.seconds();
  const bool pass = never_cycles && lands_on_solutions && runs == 60 && elapsed < 30.0;
  std::ostringstream detail;
  detail << "runs=" << runs << " never_cycles=" << never_cycles
         << " terminal_within_1e-4=" << lands_on_solutions << " t=" << elapsed << "s";
  REQUIRE(announce(8, "60 augmented runs: no cycles, terminals on the solution set", pass,
                   detail.str()));
}

TEST_CASE("criterion 9: oracle cross-checks") {
  bool equilibria = true;
  for (const Problem& p : corpus::all()) {
    for (const SolutionCertificate& cert : enumerate_kkt(p).solutions) {
      if (!is_equilibrium(p, cert.z_star, 1e-8)) equilibria = false;
    }
  }

  SplitMix64 rng(9009);
  const std::vector<Problem> problems = corpus::all();
  double worst_fd = 0.0;
  int used = 0;
  while (used < 100) {
    const Problem p = problems[rng.next_u64() % problems.size()].with_rho(
        rng.next_u64() % 2 ? 0.0 : 2.0);
    const State z = gen::random_state(p, rng);
    const Vector g = p.constraint_values(z.x);
    bool near_kink = false;
    for (Index i = 0; i < p.m(); ++i)
      if (std::abs(g[i]) <= 1e-4) near_kink = true;
    if (near_kink) continue;
    ++used;
    worst_fd = std::max(worst_fd, finite_diff_gradients(p, z, 1e-6));
  }

  const bool pass = equilibria && worst_fd <= 1e-5;
  std::ostringstream detail;
  detail << "equilibria_hold=" << equilibria << " fd_samples=" << used
         << " worst_fd_error=" << worst_fd;
  REQUIRE(announce(9, "enumerated solutions are equilibria; gradients check out", pass,
                   detail.str()));
}

TEST_CASE("criterion 10: repeated sweeps are byte-identical") {
  const fs::path config = fs::path(SADDLEFLOW_SOURCE_DIR) / "configs" / "sweep_demo.json";
  const fs::path dir_a = fs::path("acceptance_out") / "sweep_a";
  const fs::path dir_b = fs::path("acceptance_out") / "sweep_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  const std::string base = std::string("\"") + SADDLEFLOW_CLI_PATH + "\" sweep \"" +
                           config.string() + "\" --samples 6 --seed 11 --output-dir ";
  const int rc_a = std::system((base + "\"" + dir_a.string() + "\" > /dev/null").c_str());
  const int rc_b = std::system((base + "\"" + dir_b.string() + "\" > /dev/null").c_str());
  REQUIRE(rc_a == 0);
  REQUIRE(rc_b == 0);

  bool identical = slurp(dir_a / "report.json") == slurp(dir_b / "report.json");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const fs::path name = entry.path().filename();
    if (slurp(dir_a / name) != slurp(dir_b / name)) identical = false;
    ++files;
  }
  const bool pass = identical && files >= 1 + 2 * 18;  // report + csv/dat per run
  std::ostringstream detail;
  detail << "files_compared=" << files << " identical=" << identical;
  REQUIRE(announce(10, "seeded sweep determinism through the CLI", pass, detail.str()));
}
