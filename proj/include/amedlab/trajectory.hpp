#pragma once

#include "amedlab/common.hpp"

#include <vector>

namespace amedlab {

struct TrajectoryNode {
  double t = 0.0;
  Vector x;
};

/// One model evaluation consumed by a solver.
struct Evaluation {
  double t = 0.0;
  Vector epsilon;
};

/// States at every schedule node in descending time (nodes.front() is t_N),
/// the evaluations actually consumed, and the evaluation count.
struct Trajectory {
  std::vector<TrajectoryNode> nodes;
  std::vector<Evaluation> evals;
  int nfe = 0;

  [[nodiscard]] const Vector& endpoint() const { return nodes.back().x; }
  /// Node states as rows of a matrix, in stored order.
  [[nodiscard]] Matrix state_matrix() const;
};

}  // namespace amedlab
