#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "saddleflow/analysis.hpp"
#include "saddleflow/oracle.hpp"
#include "saddleflow/problem_io.hpp"
#include "saddleflow/trajectory_io.hpp"

namespace saddleflow {

struct AnalysisFlags {
  bool kkt = true;
  bool monotonicity = false;
  bool dissipation = true;
  bool zero_dissipation = false;
  bool hamiltonian = false;
  bool cycle = true;
};

// Randomized initial states drawn around a center (defaults to the projection
// of the origin onto X with unit duals).
struct SamplingSpec {
  std::size_t count = 0;
  double radius = 3.0;
  std::optional<State> center;
};

struct RunConfig {
  Problem problem;
  std::string name = "run";
  std::vector<State> initial_states;
  SamplingSpec sampling;
  std::vector<double> rho_values;
  IntegratorConfig integrator;
  AnalysisFlags analyses;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  void validate() const {
    integrator.validate();
    if (initial_states.empty() && sampling.count == 0)
      throw ConfigError("config: needs at least one initial state or a sampling spec");
    if (rho_values.empty()) throw ConfigError("config: rho_values must not be empty");
    for (double r : rho_values)
      if (!(r >= 0.0)) throw ConfigError("config: rho values must be nonnegative");
    for (const State& z : initial_states) problem.require_state(z);
    if (sampling.center) problem.require_state(*sampling.center);
  }
};

inline constexpr int kRunConfigSchemaVersion = 1;
inline constexpr const char* kOutputDirEnvVar = "SADDLEFLOW_OUTPUT_DIR";

namespace detail {

inline State parse_state(const Json& j, const std::string& path) {
  return State{json_to_vector(require_field(j, "x", path), path + ".x"),
               json_to_vector(require_field(j, "mu", path), path + ".mu")};
}

inline Json state_to_json(const State& z) {
  Json j;
  j["x"] = vector_to_json(z.x);
  j["mu"] = vector_to_json(z.mu);
  return j;
}

inline Scheme parse_scheme(const std::string& name, const std::string& path) {
  if (name == "projected-euler") return Scheme::ProjectedEuler;
  if (name == "tangent-step") return Scheme::TangentStep;
  throw ConfigError(path + ": unknown scheme '" + name + "'");
}

inline Json certificate_to_json(const SolutionCertificate& cert) {
  Json j;
  j["z"] = state_to_json(cert.z_star);
  j["stationarity_residual"] = cert.stationarity_residual;
  j["feasibility_residual"] = cert.feasibility_residual;
  j["complementarity_residual"] = cert.complementarity_residual;
  j["strict_complementarity"] = cert.strict_complementarity;
  return j;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir) {
  const std::string path = "config";
  const Json& version = detail::require_field(j, "schema_version", path);
  if (!version.is_number_integer() || version.get<int>() != kRunConfigSchemaVersion)
    throw ConfigError(path + ".schema_version: expected " +
                      std::to_string(kRunConfigSchemaVersion));

  const Json& pj = detail::require_field(j, "problem", path);
  Problem problem = pj.is_string()
                        ? load_problem_file((base_dir / pj.get<std::string>()).string())
                        : parse_problem_json(pj, path + ".problem");

  RunConfig cfg{std::move(problem)};
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();

  if (j.contains("initial_states")) {
    const Json& states = j["initial_states"];
    if (!states.is_array()) throw ConfigError(path + ".initial_states: expected an array");
    for (std::size_t i = 0; i < states.size(); ++i)
      cfg.initial_states.push_back(
          detail::parse_state(states[i], path + ".initial_states[" + std::to_string(i) + "]"));
  }
  if (j.contains("sampling")) {
    const Json& s = j["sampling"];
    cfg.sampling.count = detail::require_field(s, "count", path + ".sampling").get<std::size_t>();
    if (s.contains("radius"))
      cfg.sampling.radius = detail::json_to_scalar(s["radius"], path + ".sampling.radius");
    if (s.contains("center"))
      cfg.sampling.center = detail::parse_state(s["center"], path + ".sampling.center");
  }
  if (j.contains("rho_values")) {
    cfg.rho_values.clear();
    for (std::size_t i = 0; i < j["rho_values"].size(); ++i)
      cfg.rho_values.push_back(detail::json_to_scalar(
          j["rho_values"][i], path + ".rho_values[" + std::to_string(i) + "]"));
  } else {
    cfg.rho_values = {cfg.problem.rho()};
  }
  if (j.contains("integrator")) {
    const Json& ij = j["integrator"];
    const std::string ipath = path + ".integrator";
    if (ij.contains("step_size"))
      cfg.integrator.step_size = detail::json_to_scalar(ij["step_size"], ipath + ".step_size");
    if (ij.contains("horizon"))
      cfg.integrator.horizon = detail::json_to_scalar(ij["horizon"], ipath + ".horizon");
    if (ij.contains("scheme"))
      cfg.integrator.scheme =
          detail::parse_scheme(ij["scheme"].get<std::string>(), ipath + ".scheme");
    if (ij.contains("equilibrium_tol"))
      cfg.integrator.equilibrium_tol =
          detail::json_to_scalar(ij["equilibrium_tol"], ipath + ".equilibrium_tol");
    if (ij.contains("record_stride"))
      cfg.integrator.record_stride = ij["record_stride"].get<std::size_t>();
  }
  if (j.contains("analyses")) {
    const Json& aj = j["analyses"];
    auto flag = [&](const char* key, bool dflt) {
      return aj.contains(key) ? aj[key].get<bool>() : dflt;
    };
    cfg.analyses.kkt = flag("kkt", cfg.analyses.kkt);
    cfg.analyses.monotonicity = flag("monotonicity", cfg.analyses.monotonicity);
    cfg.analyses.dissipation = flag("dissipation", cfg.analyses.dissipation);
    cfg.analyses.zero_dissipation = flag("zero_dissipation", cfg.analyses.zero_dissipation);
    cfg.analyses.hamiltonian = flag("hamiltonian", cfg.analyses.hamiltonian);
    cfg.analyses.cycle = flag("cycle", cfg.analyses.cycle);
  }
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("cannot open config file '" + filename.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  return parse_run_config(j, filename.parent_path());
}

namespace detail {

inline State sample_state(const Problem& p, const SamplingSpec& spec, std::uint64_t seed) {
  SplitMix64 rng(seed);
  State center;
  if (spec.center) {
    center = *spec.center;
  } else {
    center.x = euclidean_project(p.hard_set(), Vector::Zero(p.n()));
    center.mu = Vector::Ones(p.m());
  }
  State z;
  z.x = euclidean_project(p.hard_set(),
                          center.x + rng.uniform_vector(p.n(), -spec.radius, spec.radius));
  z.mu = (center.mu + rng.uniform_vector(p.m(), -spec.radius, spec.radius)).cwiseMax(0.0);
  return z;
}

// Random pair (z, zh) in Z for the monotonicity tally.
inline std::pair<State, State> sample_state_pair(const Problem& p, double radius,
                                                 std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto draw = [&]() {
    State z;
    z.x = euclidean_project(p.hard_set(), rng.uniform_vector(p.n(), -radius, radius));
    z.mu = rng.uniform_vector(p.m(), 0.0, radius);
    return z;
  };
  State a = draw();
  State b = draw();
  return {a, b};
}

struct EntryResult {
  std::size_t rho_index = 0;
  std::size_t z0_index = 0;
  Json blob;
};

inline Json run_entry(const RunConfig& cfg, std::size_t rho_index, std::size_t z0_index,
                      const State& z0, const std::optional<SolutionCertificate>& reference,
                      const std::filesystem::path& out_dir) {
  const double rho = cfg.rho_values[rho_index];
  const Problem p = cfg.problem.with_rho(rho);
  Json blob;
  blob["rho"] = rho;
  blob["rho_index"] = rho_index;
  blob["z0_index"] = z0_index;
  blob["z0"] = state_to_json(z0);

  std::optional<State> z_ref;
  if (reference) z_ref = reference->z_star;

  Trajectory traj;
  try {
    traj = integrate(p, z0, cfg.integrator, z_ref);
  } catch (const std::exception& e) {
    blob["error"] = std::string("integration: ") + e.what();
    return blob;
  }

  const std::string tag =
      "rho" + format_float(rho) + "_z" + std::to_string(z0_index);
  const std::string traj_name = "traj_" + tag + ".csv";
  const std::string phase_name = "phase_" + tag + ".dat";
  {
    std::ofstream csv(out_dir / traj_name);
    write_trajectory_csv(csv, traj, p.n(), p.m());
    std::ofstream dat(out_dir / phase_name);
    write_phase_data(dat, traj, p.n(), p.m());
  }
  blob["trajectory_file"] = traj_name;
  blob["phase_file"] = phase_name;
  blob["terminal_status"] = to_string(traj.terminal_status);
  if (traj.error_step) blob["error_step"] = *traj.error_step;
  blob["recorded_samples"] = traj.size();
  blob["t_final"] = traj.times.back();
  blob["terminal"] = state_to_json(traj.terminal_state());
  blob["terminal_field_norm"] = traj.field_norm.back();

  if (cfg.analyses.kkt) {
    blob["terminal_certificate"] = certificate_to_json(kkt_certificate(p, traj.terminal_state()));
  }
  if (cfg.analyses.cycle) {
    if (z_ref) {
      const CycleVerdict v = detect_cycle(traj, *z_ref);
      Json cj;
      cj["kind"] = to_string(v.kind);
      cj["radius"] = v.radius;
      cj["period_estimate"] = v.period_estimate ? Json(*v.period_estimate) : Json(nullptr);
      cj["residual_to_analytic_orbit"] = v.residual_to_analytic_orbit;
      blob["cycle"] = std::move(cj);
    } else {
      blob["cycle"] = {{"skipped", "no reference solution available"}};
    }
  }
  if (cfg.analyses.dissipation && z_ref) {
    double lo = 0.0, hi = 0.0;
    std::size_t positive = 0;
    for (double d : traj.dissipation) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      if (d > 1e-10) ++positive;
    }
    Json dj;
    dj["min"] = lo;
    dj["max"] = hi;
    dj["positive_samples"] = positive;
    blob["dissipation"] = std::move(dj);
  }
  if (cfg.analyses.zero_dissipation && reference) {
    std::size_t members = 0;
    double max_defect = 0.0;
    bool items_hold = true;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      if (std::abs(traj.dissipation[k]) > kZeroDissipationTol) continue;
      ++members;
      const ZeroDissipationReport rep = zero_dissipation_checks(p, traj.states[k], *reference);
      max_defect = std::max(max_defect, rep.max_defect());
      if (!rep.inactive_duals_zero || (rep.strict_comp_applicable && !rep.strict_comp_implication))
        items_hold = false;
    }
    Json zj;
    zj["samples_in_set"] = members;
    zj["max_defect"] = max_defect;
    zj["items_hold"] = items_hold;
    blob["zero_dissipation"] = std::move(zj);
  }
  if (cfg.analyses.hamiltonian && reference) {
    try {
      const HamiltonianSystem sys = hamiltonian_reduction(p, *reference);
      Json hj;
      Json act = Json::array();
      for (Index i : sys.active_indices) act.push_back(i);
      hj["active_indices"] = std::move(act);
      hj["singular_values"] = vector_to_json(sys.sigma);
      const HamiltonianResidual res = hamiltonian_residual(sys, traj);
      hj["max_rhs_residual"] = res.max_residual;
      hj["segments"] = res.segments;
      blob["hamiltonian"] = std::move(hj);
    } catch (const std::exception& e) {
      blob["hamiltonian"] = {{"skipped", e.what()}};
    }
  }
  return blob;
}

}  // namespace detail

// Executes every (rho, initial state) pair, writes per-run CSV/plot artifacts
// and a consolidated report.json. Entries run on a small worker pool; the
// report is merged in deterministic (rho, z0) order. Returns 0; per-entry
// failures are recorded in the report rather than aborting the batch.
inline int run(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::path out_dir = cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnvVar)) out_dir = env;
  std::filesystem::create_directories(out_dir);

  std::vector<State> initial = cfg.initial_states;
  for (std::size_t s = 0; s < cfg.sampling.count; ++s)
    initial.push_back(
        detail::sample_state(cfg.problem, cfg.sampling, derive_seed(cfg.seed, 1000 + s)));

  Json report;
  report["schema_version"] = kRunConfigSchemaVersion;
  report["name"] = cfg.name;
  report["seed"] = cfg.seed;
  report["problem"] = serialize_problem(cfg.problem);
  report["rho_values"] = cfg.rho_values;

  std::optional<SolutionCertificate> reference;
  if (cfg.analyses.kkt) {
    try {
      const SolutionSet sols = enumerate_kkt(cfg.problem);
      Json kj;
      Json list = Json::array();
      for (const SolutionCertificate& c : sols.solutions)
        list.push_back(detail::certificate_to_json(c));
      kj["solutions"] = std::move(list);
      kj["enumeration_complete"] = sols.enumeration_complete;
      Json act = Json::array();
      for (const auto& a : sols.active_set_per_solution) {
        Json one = Json::array();
        for (Index i : a) one.push_back(i);
        act.push_back(std::move(one));
      }
      kj["active_sets"] = std::move(act);
      kj["log"] = sols.log;
      report["kkt"] = std::move(kj);
      if (!sols.solutions.empty()) reference = sols.solutions.front();
    } catch (const std::exception& e) {
      report["kkt"] = {{"error", e.what()}};
    }
  }

  // Worker pool over (rho, z0) entries; results land in a pre-sized table.
  const std::size_t entries = cfg.rho_values.size() * initial.size();
  std::vector<Json> blobs(entries);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  std::vector<std::future<void>> pending;
  for (std::size_t e = 0; e < entries; ++e) {
    const std::size_t r = e / initial.size();
    const std::size_t s = e % initial.size();
    pending.push_back(std::async(std::launch::async, [&, e, r, s] {
      try {
        blobs[e] = detail::run_entry(cfg, r, s, initial[s], reference, out_dir);
      } catch (const std::exception& ex) {
        blobs[e] = Json{{"rho_index", r}, {"z0_index", s}, {"error", ex.what()}};
      }
    }));
    if (pending.size() >= workers) {
      for (auto& f : pending) f.get();
      pending.clear();
    }
  }
  for (auto& f : pending) f.get();
  report["runs"] = blobs;

  if (cfg.analyses.monotonicity) {
    Json tallies = Json::array();
    for (std::size_t r = 0; r < cfg.rho_values.size(); ++r) {
      const Problem p = cfg.problem.with_rho(cfg.rho_values[r]);
      Json tally;
      tally["rho"] = cfg.rho_values[r];
      if (std::abs(p.tau_x() - 1.0) > 1e-12 || std::abs(p.tau_mu() - 1.0) > 1e-12) {
        tally["skipped"] = "monotonicity decomposition requires unit time constants";
      } else {
        const std::size_t samples = 200;
        std::size_t violations = 0;
        for (std::size_t s = 0; s < samples; ++s) {
          const auto [za, zb] =
              detail::sample_state_pair(p, 3.0, derive_seed(cfg.seed, 7000 + 100 * r + s));
          const MonotonicityReport rep = monotonicity_gap(p, za, zb);
          const bool ok = rep.gap <= 1e-10 &&
                          std::abs(rep.gap + rep.m1 + rep.m2 + rep.m3) <= 1e-10 &&
                          rep.projected_gap <= rep.gap + 1e-10 && rep.m1 >= -1e-10 &&
                          rep.m3 >= -1e-10;
          if (!ok) ++violations;
        }
        tally["samples"] = samples;
        tally["violations"] = violations;
      }
      tallies.push_back(std::move(tally));
    }
    report["monotonicity"] = std::move(tallies);
  }

  std::ofstream out(out_dir / "report.json");
  out << report.dump(2) << '\n';
  return 0;
}

}  // namespace saddleflow
