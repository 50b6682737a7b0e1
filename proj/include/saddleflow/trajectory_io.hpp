#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "saddleflow/flow.hpp"

namespace saddleflow {

// Full-precision decimal form (17 significant digits round-trips a double
// bit-exactly), locale-independent.
inline std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Columns: t, x_1..x_n, mu_1..mu_m, dissipation, lasalle, field_norm.
// Diagnostics that were not computed (no reference state) are written as nan.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, Index n, Index m) {
  out << "t";
  for (Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Index i = 1; i <= m; ++i) out << ",mu_" << i;
  out << ",dissipation,lasalle,field_norm\n";
  const bool has_ref = traj.dissipation.size() == traj.states.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << format_float(traj.times[k]);
    for (Index i = 0; i < n; ++i) out << ',' << format_float(traj.states[k].x[i]);
    for (Index i = 0; i < m; ++i) out << ',' << format_float(traj.states[k].mu[i]);
    out << ',' << format_float(has_ref ? traj.dissipation[k] : nan);
    out << ',' << format_float(has_ref ? traj.lasalle[k] : nan);
    out << ',' << format_float(traj.field_norm[k]) << '\n';
  }
}

// Whitespace-separated state columns for gnuplot-style phase plots.
inline void write_phase_data(std::ostream& out, const Trajectory& traj, Index n, Index m) {
  out << "#";
  for (Index i = 1; i <= n; ++i) out << " x_" << i;
  for (Index i = 1; i <= m; ++i) out << " mu_" << i;
  out << '\n';
  for (const State& z : traj.states) {
    for (Index i = 0; i < n; ++i) out << (i ? " " : "") << format_float(z.x[i]);
    for (Index i = 0; i < m; ++i) out << ' ' << format_float(z.mu[i]);
    out << '\n';
  }
}

}  // namespace saddleflow
