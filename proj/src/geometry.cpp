#include "amedlab/geometry.hpp"

#include "amedlab/amed.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace amedlab {

PcaResult pca_states(const Matrix& states) {
  if (states.rows() < 1) throw ContractError("pca: no states");
  PcaResult out;
  out.mean = states.colwise().mean().transpose();
  const Matrix centered = states.rowwise() - out.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(states.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw EvaluationError("pca: eigen-decomposition failed");
  const Eigen::Index d = cov.rows();
  out.components.resize(d, d);
  out.eigenvalues.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    // Eigen sorts ascending
    Vector v = solver.eigenvectors().col(d - 1 - j);
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(v[i]) > 1e-12 * scale) {
        if (v[i] < 0.0) v = -v;
        break;
      }
    }
    out.components.col(j) = v;
    out.eigenvalues[j] = std::max(0.0, solver.eigenvalues()[d - 1 - j]);
  }
  return out;
}

PcaResult pca_trajectory(const Trajectory& traj) {
  if (traj.nodes.size() < 3) throw ContractError("pca_trajectory: need at least 3 nodes");
  return pca_states(traj.state_matrix());
}

std::vector<std::optional<double>> projection_error(const Trajectory& traj, int k) {
  const PcaResult pca = pca_trajectory(traj);
  const Eigen::Index d = pca.mean.size();
  if (k < 1 || k > d) throw ParameterError("projection_error: need 1 <= k <= d");
  const Matrix basis = pca.components.leftCols(k);
  std::vector<std::optional<double>> out;
  out.reserve(traj.nodes.size());
  for (const auto& node : traj.nodes) {
    const double norm = node.x.norm();
    if (norm == 0.0) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const Vector centered = node.x - pca.mean;
    const Vector projected = pca.mean + basis * (basis.transpose() * centered);
    out.emplace_back((node.x - projected).norm() / norm);
  }
  return out;
}

Vector cumulative_variance(const Trajectory& traj) {
  const PcaResult pca = pca_trajectory(traj);
  const double total = pca.eigenvalues.sum();
  Vector out(pca.eigenvalues.size());
  double running = 0.0;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    running += pca.eigenvalues[k];
    out[k] = total > 0.0 ? std::min(1.0, running / total) : 1.0;
  }
  if (out.size() > 0) out[out.size() - 1] = 1.0;
  return out;
}

namespace {

struct Candidate {
  Vector x;
  SolverCarry carry;
};

Candidate grid_step(const GaussianMixture& model, const SolverKind& base, const Vector& x, const SolverCarry& carry,
                    double t_hi, double t_lo, double r) {
  PredictorOutput out;
  out.r = r;
  out.c = 1.0;
  const IntervalStart start = interval_start(model, x, t_hi, false);
  Candidate cand{Vector(), carry};
  if (base.tag == SolverTag::dpm2) {
    cand.x = amed_apply(model, start, x, t_hi, t_lo, out).x;
  } else {
    cand.x = plugin_apply(model, base, start, x, t_hi, t_lo, out, cand.carry).x;
  }
  return cand;
}

}  // namespace

std::vector<AlignmentRow> grid_align(const GaussianMixture& model, const SolverKind& base,
                                     const TimeSchedule& schedule, std::span<const double> grid,
                                     const Trajectory& oracle) {
  if (grid.empty()) throw ParameterError("grid_align: empty grid");
  for (double r : grid) {
    if (!(r > 0.0 && r <= 1.0)) throw ParameterError("grid_align: grid values must lie in (0, 1]");
  }
  if (oracle.nodes.size() != schedule.size()) throw ContractError("grid_align: oracle does not match the schedule");
  const std::size_t last = schedule.size() - 1;
  Candidate baseline{oracle.nodes.front().x, {}};
  Candidate searched = baseline;
  std::vector<AlignmentRow> rows;
  for (std::size_t n = last; n >= 1; --n) {
    const double t_hi = schedule[n];
    const double t_lo = schedule[n - 1];
    const Vector& truth = oracle.nodes[last - n + 1].x;
    baseline = grid_step(model, base, baseline.x, baseline.carry, t_hi, t_lo, 0.5);

    std::optional<Candidate> best;
    double best_err = 0.0;
    double best_r = grid.front();
    for (double r : grid) {
      Candidate cand = grid_step(model, base, searched.x, searched.carry, t_hi, t_lo, r);
      const double err = (cand.x - truth).norm();
      if (!best || err < best_err) {
        best_err = err;
        best_r = r;
        best = std::move(cand);
      }
    }
    searched = std::move(*best);
    AlignmentRow row;
    row.step = static_cast<int>(n);
    row.t = t_lo;
    row.best_r = best_r;
    row.baseline_error = (baseline.x - truth).norm();
    row.searched_error = best_err;
    row.alignment = row.baseline_error - row.searched_error;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> parse_grid(const std::string& text) {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
  try {
    if (second == std::string::npos) {
      // comma separated list
      std::vector<double> out;
      std::size_t pos = 0;
      while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        out.push_back(std::stod(text.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      return out;
    }
    lo = std::stod(text.substr(0, first));
    hi = std::stod(text.substr(first + 1, second - first - 1));
    step = std::stod(text.substr(second + 1));
  } catch (const std::exception&) {
    throw ParameterError("bad grid '" + text + "' (expected lo:hi:step or a comma list)");
  }
  if (!(step > 0.0) || hi < lo) throw ParameterError("bad grid '" + text + "'");
  std::vector<double> out;
  const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) out.push_back(lo + i * step);
  return out;
}

}  // namespace amedlab
