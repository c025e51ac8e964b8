#include "amedlab/experiment.hpp"

#include "amedlab/io.hpp"
#include "amedlab/metrics.hpp"
#include "amedlab/parallel.hpp"
#include "amedlab/rng.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace amedlab {

int nodes_for_nfe(const SolverKind& kind, int nfe) {
  const int per_step = kind.evals_per_step();
  const int budget = nfe + (kind.afs ? 1 : 0);
  if (nfe < 1 || budget % per_step != 0) {
    throw ConfigError("NFE " + std::to_string(nfe) + " does not fit " + kind.name() +
                      (kind.afs ? " with AFS" : " without AFS") + " (" + std::to_string(per_step) +
                      " evaluations per step)");
  }
  return budget / per_step + 1;
}

Vector initial_noise(std::uint64_t seed, std::size_t index, int dim, double t_max) {
  CounterRng rng = CounterRng(seed, 0x1417ull).derive(index);
  Vector x(dim);
  for (int j = 0; j < dim; ++j) x[j] = t_max * rng.normal();
  return x;
}

std::vector<Vector> oracle_endpoints(const GaussianMixture& model, const std::vector<Vector>& x_T, double t_min,
                                     double t_max, int substeps, unsigned threads) {
  const TimeSchedule fine = make_schedule(ScheduleSpec{ScheduleKind::polynomial, 7.0}, 33, t_min, t_max);
  std::vector<Vector> out(x_T.size());
  parallel_for(
      x_T.size(), [&](std::size_t i) { out[i] = oracle_solve(model, x_T[i], fine, substeps).endpoint(); }, threads);
  return out;
}

MetricsReport run_experiment(const RunConfig& cfg) {
  return run_experiment(load_mixture(cfg.model_path), cfg);
}

MetricsReport run_experiment(const GaussianMixture& model, const RunConfig& cfg) {
  if (cfg.batch < 0) throw ConfigError("batch must be non-negative");
  std::vector<SolverKind> solvers = cfg.solvers;
  for (auto& kind : solvers) {
    kind.afs = cfg.afs;
    for (int nfe : cfg.nfe) nodes_for_nfe(kind, nfe);
  }
  MetricsReport report;
  if (cfg.batch == 0) {
    if (!cfg.out_dir.empty()) write_report(cfg, report, cfg.out_dir);
    return report;
  }

  const std::size_t batch = static_cast<std::size_t>(cfg.batch);
  std::vector<Vector> x_T(batch);
  for (std::size_t i = 0; i < batch; ++i) x_T[i] = initial_noise(cfg.seed, i, model.dim(), cfg.t_max);
  const std::vector<Vector> reference =
      oracle_endpoints(model, x_T, cfg.t_min, cfg.t_max, cfg.oracle_substeps, cfg.threads);
  CounterRng data_rng(cfg.seed, 0xDA7Aull);
  const std::vector<Vector> data = model.sample_data(data_rng, batch);

  for (const auto& kind : solvers) {
    std::vector<std::pair<double, double>> curve;
    for (int nfe : cfg.nfe) {
      const int nodes = nodes_for_nfe(kind, nfe);
      const TimeSchedule schedule = make_schedule(cfg.schedule, nodes, cfg.t_min, cfg.t_max);
      const auto start = std::chrono::steady_clock::now();
      std::vector<Vector> endpoints(batch);
      std::vector<int> counts(batch);
      parallel_for(
          batch,
          [&](std::size_t i) {
            Trajectory traj = sample(model, kind, schedule, x_T[i]);
            counts[i] = traj.nfe;
            endpoints[i] = traj.endpoint();
          },
          cfg.threads);
      MetricsRow row;
      row.solver = kind.name();
      row.nfe = nfe;
      row.nodes = nodes;
      row.reported_nfe = counts.front();
      for (int c : counts) {
        if (c != row.reported_nfe) throw ContractError("evaluation counts differ across trajectories");
      }
      row.mean_endpoint_error = mean_endpoint_error(endpoints, reference);
      row.sliced_wasserstein = sliced_wasserstein(endpoints, data, cfg.sw_projections, cfg.seed);
      row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      curve.emplace_back(static_cast<double>(nodes - 1), row.mean_endpoint_error);
      report.rows.push_back(std::move(row));
    }
    if (curve.size() >= 3) report.orders[kind.name()] = order_estimate(curve);
  }
  if (!cfg.out_dir.empty()) write_report(cfg, report, cfg.out_dir);
  return report;
}

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "solver,nfe,nodes,reported_nfe,mean_endpoint_error,sliced_wasserstein\n";
  for (const auto& row : report.rows) {
    out << row.solver << ',' << row.nfe << ',' << row.nodes << ',' << row.reported_nfe << ','
        << format_double(row.mean_endpoint_error) << ',' << format_double(row.sliced_wasserstein) << '\n';
  }
  return out.str();
}

void write_report(const RunConfig& cfg, const MetricsReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "metrics.csv");
    if (!out) throw ConfigError("cannot write metrics.csv in '" + dir + "'");
    out << metrics_csv(report);
  }
  if (report.rows.empty()) return;
  nlohmann::json doc;
  doc["format"] = "amedlab-report";
  doc["version"] = 1;
  std::vector<std::string> names;
  for (const auto& s : cfg.solvers) names.push_back(s.name());
  doc["config"] = {{"model", cfg.model_path}, {"solvers", names},       {"schedule", cfg.schedule.to_string()},
                   {"t_min", cfg.t_min},      {"t_max", cfg.t_max},     {"nfe", cfg.nfe},
                   {"afs", cfg.afs},          {"batch", cfg.batch},     {"seed", cfg.seed},
                   {"oracle_substeps", cfg.oracle_substeps},            {"sw_projections", cfg.sw_projections}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"solver", row.solver},
                    {"nfe", row.nfe},
                    {"nodes", row.nodes},
                    {"reported_nfe", row.reported_nfe},
                    {"mean_endpoint_error", row.mean_endpoint_error},
                    {"sliced_wasserstein", row.sliced_wasserstein}});
  }
  doc["rows"] = rows;
  doc["orders"] = report.orders;
  {
    std::ofstream out(base / "report.json");
    out << doc.dump(2) << '\n';
  }
  std::ofstream timing(base / "timing.csv");
  timing << "solver,nfe,wall_seconds\n";
  for (const auto& row : report.rows) timing << row.solver << ',' << row.nfe << ',' << row.wall_seconds << '\n';
}

}  // namespace amedlab
