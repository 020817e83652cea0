#pragma once

// CSV output for trajectories (t,x_1,...,x_d) and sweep reports.

#include <cstdio>
#include <ostream>
#include <string>

#include "narrow_node/experiments.hpp"
#include "narrow_node/integrate.hpp"

namespace narrow_node {

/// Shortest-safe round-trip formatting (%.17g).
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const auto d = traj.states.empty() ? 0 : traj.states.front().size();
  out << 't';
  for (Eigen::Index j = 0; j < d; ++j) out << ",x_" << (j + 1);
  out << '\n';
  for (std::size_t n = 0; n < traj.size(); ++n) {
    out << format_number(traj.times[n]);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_number(traj.states[n][j]);
    out << '\n';
  }
}

inline void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "N,max_empirical_error,theoretical_bound\n";
  for (std::size_t k = 0; k < report.N_values.size(); ++k)
    out << report.N_values[k] << ',' << format_number(report.max_empirical_error[k]) << ','
        << format_number(report.theoretical_bound[k]) << '\n';
  out << "# estimated_order="
      << (report.estimated_order ? format_number(*report.estimated_order) : "undefined")
      << " seed=" << report.seed << '\n';
}

}  // namespace narrow_node
