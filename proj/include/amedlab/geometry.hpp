#pragma once

#include "amedlab/common.hpp"
#include "amedlab/schedule.hpp"
#include "amedlab/score_model.hpp"
#include "amedlab/solvers.hpp"
#include "amedlab/trajectory.hpp"

#include <optional>
#include <span>
#include <vector>

namespace amedlab {

/// Principal axes of a set of states. Columns of `components` are orthonormal
/// and ordered by descending eigenvalue; each has its first non-negligible
/// coordinate positive.
struct PcaResult {
  Matrix components;
  Vector eigenvalues;  ///< population variances along each component
  Vector mean;
};

/// PCA of the rows of `states`.
PcaResult pca_states(const Matrix& states);
PcaResult pca_trajectory(const Trajectory& traj);

/// ||x - x~|| / ||x|| per node, x~ being the projection onto the mean plus the
/// top-k components. Nodes with zero norm yield std::nullopt.
std::vector<std::optional<double>> projection_error(const Trajectory& traj, int k);

/// Fraction of total variance explained by the top k components, k = 1..d.
/// A trajectory with zero variance reports 1 for every k.
Vector cumulative_variance(const Trajectory& traj);

struct AlignmentRow {
  int step = 0;  ///< n of the target time t_n
  double t = 0.0;
  double best_r = 0.5;
  double baseline_error = 0.0;
  double searched_error = 0.0;
  double alignment = 0.0;  ///< baseline_error - searched_error
};

/// Greedy per-step search over r. The baseline places every intermediate at
/// r = 0.5; the searched trajectory picks, step by step from its own current
/// state, the r that lands closest to the oracle at t_n. For dpm2 the candidate
/// step is the mean-direction step (c = 1), for other bases the interval split.
std::vector<AlignmentRow> grid_align(const GaussianMixture& model, const SolverKind& base,
                                     const TimeSchedule& schedule, std::span<const double> grid,
                                     const Trajectory& oracle);

/// Parses "lo:hi:step" into an inclusive grid.
std::vector<double> parse_grid(const std::string& text);

}  // namespace amedlab
