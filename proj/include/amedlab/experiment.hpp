#pragma once

#include "amedlab/schedule.hpp"
#include "amedlab/score_model.hpp"
#include "amedlab/solvers.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace amedlab {

struct RunConfig {
  std::string model_path;
  std::vector<SolverKind> solvers;
  ScheduleSpec schedule;
  double t_min = 0.002;
  double t_max = 80.0;
  std::vector<int> nfe;
  bool afs = false;
  int batch = 256;
  std::uint64_t seed = 0;
  std::string out_dir;  ///< empty: do not write files
  int oracle_substeps = 64;
  int sw_projections = 64;
  unsigned threads = 0;
};

struct MetricsRow {
  std::string solver;
  int nfe = 0;
  int nodes = 0;
  double mean_endpoint_error = 0.0;
  double sliced_wasserstein = 0.0;
  int reported_nfe = 0;  ///< Trajectory::nfe, identical for every trajectory of the row
  double wall_seconds = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::map<std::string, double> orders;  ///< empirical order per solver (3+ NFE values)
};

/// Nodes an N-node schedule needs so `kind` (with its AFS flag) spends `nfe`
/// evaluations. Throws ConfigError when the budget does not fit the step structure.
int nodes_for_nfe(const SolverKind& kind, int nfe);

/// Initial noise x_T ~ N(0, t_max^2 I) for trajectory `index` of a run.
Vector initial_noise(std::uint64_t seed, std::size_t index, int dim, double t_max);

/// High-accuracy reference endpoints at t_min for the given initial states.
std::vector<Vector> oracle_endpoints(const GaussianMixture& model, const std::vector<Vector>& x_T, double t_min,
                                     double t_max, int substeps = 64, unsigned threads = 0);

MetricsReport run_experiment(const RunConfig& cfg);
MetricsReport run_experiment(const GaussianMixture& model, const RunConfig& cfg);

/// metrics.csv (deterministic), report.json (deterministic), timing.csv (wall clock).
void write_report(const RunConfig& cfg, const MetricsReport& report, const std::string& dir);
std::string metrics_csv(const MetricsReport& report);

}  // namespace amedlab
