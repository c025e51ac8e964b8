// amedlab command-line front end.
#include "amedlab/amed.hpp"
#include "amedlab/bounds.hpp"
#include "amedlab/experiment.hpp"
#include "amedlab/geometry.hpp"
#include "amedlab/io.hpp"
#include "amedlab/solvers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace amedlab;

namespace {

struct ScheduleArg {
  ScheduleSpec spec;
  std::optional<int> nodes;
};

// "kind[,N[,rho]]", e.g. "polynomial,6,7" or "logsnr,9"
ScheduleArg parse_schedule_arg(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.empty() || parts.size() > 3) throw ConfigError("schedule must look like kind[,N[,rho]]: " + text);
  ScheduleArg arg;
  arg.spec = ScheduleSpec::parse(parts[0]);
  try {
    if (parts.size() >= 2 && !parts[1].empty()) arg.nodes = std::stoi(parts[1]);
    if (parts.size() == 3) arg.spec.rho = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("bad schedule numbers: " + text);
  }
  return arg;
}

// --nfe wins over the N in --schedule; neither means 6 nodes
int resolve_nodes(const ScheduleArg& sched, int nfe, const std::function<int(int)>& from_nfe) {
  if (nfe > 0) return from_nfe(nfe);
  return sched.nodes.value_or(6);
}

std::string in_out_dir(const std::string& name) { return (fs::path(default_output_dir()) / name).string(); }

void ensure_parent(const std::string& path) {
  auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// writes to `path`, or stdout when it is empty or "-"
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::string pca_table(const Trajectory& traj) {
  std::ostringstream os;
  auto cum = cumulative_variance(traj);
  auto err = projection_error(traj, 2);
  os << "node,t,projection_error_k2\n";
  for (std::size_t i = 0; i < traj.nodes.size(); ++i) {
    os << i << ',' << format_double(traj.nodes[i].t) << ',' << (err[i] ? format_double(*err[i]) : "nan") << '\n';
  }
  os << "\nk,cumulative_variance\n";
  for (int k = 0; k < cum.size(); ++k) os << k + 1 << ',' << format_double(cum[k]) << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amedlab: fast PF-ODE samplers on analytic score models"};
  app.set_config("--config", "", "key-value config file (TOML/INI)");
  app.require_subcommand(1);

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "sample one trajectory and write it as CSV");
  std::string model_path, solver_name = "dpm2", schedule_text = "polynomial,6,7", out_path, predictor_path;
  int nfe = 0;
  bool afs = false;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double t_min = 0.002, t_max = 80.0;
  sample_cmd->add_option("--model", model_path, "mixture JSON")->required();
  sample_cmd->add_option("--solver", solver_name, "euler|heun|dpm2[:r]|ipndm[:order]|dpmpp_2m|amed");
  sample_cmd->add_option("--schedule", schedule_text, "kind[,N[,rho]]");
  sample_cmd->add_option("--nfe", nfe, "evaluation budget; overrides N");
  sample_cmd->add_flag("--afs", afs, "analytical first step");
  sample_cmd->add_option("--seed", seed);
  sample_cmd->add_option("--index", index, "trajectory index within the seed");
  sample_cmd->add_option("--predictor", predictor_path, "checkpoint; with a base solver runs AMED-Plugin");
  sample_cmd->add_option("--t-min", t_min);
  sample_cmd->add_option("--t-max", t_max);
  sample_cmd->add_option("--out", out_path, "trajectory CSV");

  // train-amed
  auto* train_cmd = app.add_subcommand("train-amed", "train the AMED predictor by distillation");
  std::string student_name = "amed", teacher_name;
  int N = 4, M = 1, images = 10000, batch = 128, hidden = 32;
  double lr = 1e-3;
  bool time_scaling = false;
  unsigned threads = 0;
  std::string loss_path;
  train_cmd->add_option("--model", model_path, "mixture JSON")->required();
  train_cmd->add_option("--student", student_name, "amed, or the base solver of an AMED-Plugin");
  train_cmd->add_option("--teacher", teacher_name, "teacher solver (default: dpm2, or the plugin base)");
  train_cmd->add_option("--N", N, "student schedule nodes");
  train_cmd->add_option("--M", M, "teacher nodes inserted per interval");
  train_cmd->add_option("--schedule", schedule_text, "kind[,N[,rho]]; N is ignored here");
  train_cmd->add_option("--images", images);
  train_cmd->add_option("--batch", batch);
  train_cmd->add_option("--lr", lr);
  train_cmd->add_option("--hidden", hidden);
  train_cmd->add_flag("--time-scaling", time_scaling, "also learn the evaluation-time scale a");
  train_cmd->add_flag("--afs", afs);
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--threads", threads);
  train_cmd->add_option("--t-min", t_min);
  train_cmd->add_option("--t-max", t_max);
  train_cmd->add_option("--out", out_path, "checkpoint JSON");
  train_cmd->add_option("--losses", loss_path, "loss curve CSV");

  // pca
  auto* pca_cmd = app.add_subcommand("pca", "PCA planarity of trajectory CSVs");
  std::string in_path, batch_dir;
  auto* pca_in = pca_cmd->add_option("--in", in_path, "trajectory CSV");
  auto* pca_batch = pca_cmd->add_option("--batch", batch_dir, "directory of trajectory CSVs");
  pca_in->excludes(pca_batch);
  pca_cmd->add_option("--out", out_path);

  // align
  auto* align_cmd = app.add_subcommand("align", "greedy grid search over the intermediate location");
  std::string grid_text = "0.1:1.0:0.1";
  int trajectories = 64, oracle_substeps = 128;
  align_cmd->add_option("--model", model_path)->required();
  align_cmd->add_option("--solver", solver_name);
  align_cmd->add_option("--grid", grid_text, "lo:hi:step or comma list");
  align_cmd->add_option("--schedule", schedule_text);
  align_cmd->add_option("--batch", trajectories);
  align_cmd->add_option("--seed", seed);
  align_cmd->add_option("--oracle-substeps", oracle_substeps);
  align_cmd->add_option("--t-min", t_min);
  align_cmd->add_option("--t-max", t_max);
  align_cmd->add_option("--out", out_path);

  // bound-check
  auto* bound_cmd = app.add_subcommand("bound-check", "Monte-Carlo check of the shell radius");
  int d = 256, trials = 4096, substeps = 200;
  double s = 1.0, t = 10.0;
  std::optional<double> a_opt;
  double b = 3.0;
  bound_cmd->add_option("--d", d);
  bound_cmd->add_option("--s", s);
  bound_cmd->add_option("--t", t);
  bound_cmd->add_option("--trials", trials);
  bound_cmd->add_option("--substeps", substeps);
  bound_cmd->add_option("--a", a_opt, "default sqrt(3d)/15");
  bound_cmd->add_option("--b", b);
  bound_cmd->add_option("--seed", seed);
  bound_cmd->add_option("--threads", threads);
  bound_cmd->add_option("--out", out_path);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "endpoint error and sliced Wasserstein over solvers and NFE");
  std::vector<std::string> solver_names{"euler", "heun", "dpm2", "ipndm", "dpmpp_2m"};
  std::vector<int> nfes{4, 6, 8, 10};
  int eval_batch = 256, projections = 64;
  std::string out_dir;
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--solvers", solver_names)->delimiter(',');
  eval_cmd->add_option("--nfe", nfes)->delimiter(',');
  eval_cmd->add_option("--schedule", schedule_text, "kind[,N[,rho]]; N is ignored");
  eval_cmd->add_flag("--afs", afs);
  eval_cmd->add_option("--batch", eval_batch);
  eval_cmd->add_option("--projections", projections);
  eval_cmd->add_option("--oracle-substeps", oracle_substeps);
  eval_cmd->add_option("--seed", seed);
  eval_cmd->add_option("--threads", threads);
  eval_cmd->add_option("--t-min", t_min);
  eval_cmd->add_option("--t-max", t_max);
  eval_cmd->add_option("--out", out_dir, "report directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample_cmd) {
      auto model = load_mixture(model_path);
      auto sched_arg = parse_schedule_arg(schedule_text);
      Vector x_T = initial_noise(seed, index, model.dim(), t_max);
      Trajectory traj;
      if (solver_name == "amed" || !predictor_path.empty()) {
        std::optional<SolverKind> base;
        if (solver_name != "amed") base = SolverKind::parse(solver_name);
        auto params = predictor_path.empty() ? PredictorParams::zeros(PredictorConfig{}) : load_predictor(predictor_path);
        int nodes = resolve_nodes(sched_arg, nfe, [&](int budget) {
          int per = 2 * (base ? base->evals_per_step() : 1);
          int spend = budget + (afs ? 1 : 0);
          if (spend % per != 0) throw ConfigError("nfe does not fit the AMED step structure");
          return spend / per + 1;
        });
        auto sched = make_schedule(sched_arg.spec, nodes, t_min, t_max);
        traj = amed_sample(model, params, base, sched, x_T, afs);
      } else {
        auto kind = SolverKind::parse(solver_name);
        kind.afs = afs;
        int nodes = resolve_nodes(sched_arg, nfe, [&](int budget) { return nodes_for_nfe(kind, budget); });
        traj = sample(model, kind, make_schedule(sched_arg.spec, nodes, t_min, t_max), x_T);
      }
      std::string path = out_path.empty() ? in_out_dir("traj.csv") : out_path;
      std::ostringstream os;
      write_trajectory_csv(os, traj);
      emit(path, os.str());
      std::cerr << "nfe " << traj.nfe << '\n';
    } else if (*train_cmd) {
      auto model = load_mixture(model_path);
      auto sched_arg = parse_schedule_arg(schedule_text);
      TrainConfig cfg;
      if (student_name != "amed") cfg.student_base = SolverKind::parse(student_name);
      if (!teacher_name.empty()) {
        cfg.teacher = SolverKind::parse(teacher_name);
      } else if (cfg.student_base) {
        cfg.teacher = *cfg.student_base;
      }
      cfg.M = M;
      cfg.images = images;
      cfg.batch = batch;
      cfg.lr = lr;
      cfg.seed = seed;
      cfg.afs = afs;
      cfg.threads = threads;
      cfg.predictor.hidden = hidden;
      cfg.predictor.time_scaling = time_scaling;
      auto sched = make_schedule(sched_arg.spec, N, t_min, t_max);
      auto result = train(model, cfg, sched);
      std::string path = out_path.empty() ? in_out_dir("predictor.json") : out_path;
      ensure_parent(path);
      save_predictor(result.params, path);
      if (!loss_path.empty()) {
        std::ostringstream os;
        os << "loop,step,loss\n";
        for (const auto& rec : result.losses) os << rec.loop << ',' << rec.step << ',' << format_double(rec.loss) << '\n';
        emit(loss_path, os.str());
      }
      std::cerr << "updates " << result.updates << ", checkpoint " << path << '\n';
    } else if (*pca_cmd) {
      if (!in_path.empty()) {
        emit(out_path, pca_table(load_trajectory_csv(in_path)));
      } else if (!batch_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(batch_dir)) {
          if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        std::ostringstream os;
        os << "file,max_projection_error_k2,cumulative_variance_k1,cumulative_variance_k2\n";
        for (const auto& file : files) {
          auto traj = load_trajectory_csv(file.string());
          double worst = 0.0;
          for (const auto& e : projection_error(traj, 2)) {
            if (e) worst = std::max(worst, *e);
          }
          auto cum = cumulative_variance(traj);
          os << file.filename().string() << ',' << format_double(worst) << ',' << format_double(cum[0]) << ','
             << format_double(cum.size() > 1 ? cum[1] : 1.0) << '\n';
        }
        emit(out_path, os.str());
      } else {
        throw ConfigError("pca needs --in or --batch");
      }
    } else if (*align_cmd) {
      auto model = load_mixture(model_path);
      auto sched_arg = parse_schedule_arg(schedule_text);
      auto kind = SolverKind::parse(solver_name);
      auto sched = make_schedule(sched_arg.spec, sched_arg.nodes.value_or(6), t_min, t_max);
      auto grid = parse_grid(grid_text);
      std::vector<AlignmentRow> mean;
      for (int i = 0; i < trajectories; ++i) {
        Vector x_T = initial_noise(seed, static_cast<std::size_t>(i), model.dim(), t_max);
        auto oracle = oracle_solve(model, x_T, sched, oracle_substeps);
        auto rows = grid_align(model, kind, sched, grid, oracle);
        if (mean.empty()) {
          mean = rows;
          for (auto& r : mean) r.best_r = r.baseline_error = r.searched_error = r.alignment = 0.0;
        }
        for (std::size_t j = 0; j < rows.size(); ++j) {
          mean[j].best_r += rows[j].best_r / trajectories;
          mean[j].baseline_error += rows[j].baseline_error / trajectories;
          mean[j].searched_error += rows[j].searched_error / trajectories;
          mean[j].alignment += rows[j].alignment / trajectories;
        }
      }
      std::ostringstream os;
      os << "step,t,mean_best_r,baseline_error,searched_error,alignment\n";
      for (const auto& r : mean) {
        os << r.step << ',' << format_double(r.t) << ',' << format_double(r.best_r) << ','
           << format_double(r.baseline_error) << ',' << format_double(r.searched_error) << ','
           << format_double(r.alignment) << '\n';
      }
      emit(out_path, os.str());
    } else if (*bound_cmd) {
      auto params = BoundParams::defaults(d);
      if (a_opt) params.a = *a_opt;
      params.b = b;
      auto rep = mc_shell_check(params, s, t, trials, seed, substeps, threads);
      std::ostringstream os;
      os << "d,s,t,a,b,trials,substeps,radius,mean_norm,rel_std,rel_gap\n";
      os << d << ',' << format_double(s) << ',' << format_double(t) << ',' << format_double(params.a) << ','
         << format_double(params.b) << ',' << rep.trials << ',' << rep.substeps << ',' << format_double(rep.radius)
         << ',' << format_double(rep.mean_norm) << ',' << format_double(rep.rel_std) << ','
         << format_double(rep.mean_norm / rep.radius - 1.0) << '\n';
      emit(out_path, os.str());
    } else if (*eval_cmd) {
      RunConfig cfg;
      cfg.model_path = model_path;
      for (const auto& name : solver_names) cfg.solvers.push_back(SolverKind::parse(name));
      cfg.schedule = parse_schedule_arg(schedule_text).spec;
      cfg.t_min = t_min;
      cfg.t_max = t_max;
      cfg.nfe = nfes;
      cfg.afs = afs;
      cfg.batch = eval_batch;
      cfg.seed = seed;
      cfg.out_dir = out_dir.empty() ? default_output_dir() : out_dir;
      cfg.oracle_substeps = oracle_substeps;
      cfg.sw_projections = projections;
      cfg.threads = threads;
      auto report = run_experiment(cfg);
      std::cout << metrics_csv(report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
