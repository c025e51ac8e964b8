#pragma once

#include "amedlab/trajectory.hpp"

#include <iosfwd>
#include <string>

namespace amedlab {

/// Trajectory CSV: header "t,x_0,...,x_{d-1}", one row per node in stored
/// (descending t) order, values printed with 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void save_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(std::istream& in);
Trajectory load_trajectory_csv(const std::string& path);

/// Round-trip formatting of a double.
std::string format_double(double v);

/// $AMEDLAB_OUT_DIR when set and non-empty, otherwise ".".
std::string default_output_dir();

}  // namespace amedlab
