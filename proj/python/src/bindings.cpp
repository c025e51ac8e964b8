#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amedlab/amed.hpp"
#include "amedlab/bounds.hpp"
#include "amedlab/experiment.hpp"
#include "amedlab/geometry.hpp"
#include "amedlab/metrics.hpp"
#include "amedlab/schedule.hpp"
#include "amedlab/score_model.hpp"
#include "amedlab/solvers.hpp"

namespace py = pybind11;
using namespace amedlab;

namespace {

TimeSchedule schedule_from(const std::vector<double>& times, const std::string& kind) {
  return TimeSchedule(times, ScheduleSpec::parse(kind));
}

// (times, states, nfe) with states one row per node, in time-descending order
py::tuple unpack(const Trajectory& traj) {
  Vector times(static_cast<Eigen::Index>(traj.nodes.size()));
  for (std::size_t i = 0; i < traj.nodes.size(); ++i) times[static_cast<Eigen::Index>(i)] = traj.nodes[i].t;
  return py::make_tuple(times, traj.state_matrix(), traj.nfe);
}

std::vector<Vector> rows(const Matrix& m) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).transpose());
  return out;
}

}  // namespace

PYBIND11_MODULE(_amedlab, m) {
  m.doc() = "Desk-scale diffusion ODE samplers with learned mean-direction steps";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init<std::vector<double>, std::vector<Vector>, std::vector<double>>(), py::arg("weights"),
           py::arg("means"), py::arg("stds"))
      .def_static("load", &load_mixture, py::arg("path"))
      .def_property_readonly("dim", &GaussianMixture::dim)
      .def_property_readonly("num_components", &GaussianMixture::num_components)
      .def_property_readonly("weights", &GaussianMixture::weights)
      .def("epsilon", [](const GaussianMixture& g, const Vector& x, double t) { return eval_model(g, x, t).epsilon; },
           py::arg("x"), py::arg("t"))
      .def("denoise", [](const GaussianMixture& g, const Vector& x, double t) { return eval_model(g, x, t).denoised; },
           py::arg("x"), py::arg("t"));

  m.def(
      "make_schedule",
      [](int num_nodes, double t_min, double t_max, const std::string& kind) {
        auto s = make_schedule(ScheduleSpec::parse(kind), num_nodes, t_min, t_max);
        return std::vector<double>(s.times().begin(), s.times().end());
      },
      py::arg("num_nodes"), py::arg("t_min") = 0.002, py::arg("t_max") = 80.0, py::arg("kind") = "polynomial",
      "Increasing time nodes; kind is polynomial[:rho], logsnr or uniform.");

  m.def("initial_noise", &initial_noise, py::arg("seed"), py::arg("index"), py::arg("dim"), py::arg("t_max") = 80.0);

  m.def(
      "sample",
      [](const GaussianMixture& g, const std::string& solver, const std::vector<double>& times, const Vector& x_T,
         bool afs, const std::string& kind) {
        auto k = SolverKind::parse(solver);
        k.afs = afs;
        return unpack(sample(g, k, schedule_from(times, kind), x_T));
      },
      py::arg("model"), py::arg("solver"), py::arg("times"), py::arg("x_T"), py::arg("afs") = false,
      py::arg("kind") = "polynomial", "Returns (times, states, nfe), states ordered from t_max down.");

  m.def(
      "amed_sample",
      [](const GaussianMixture& g, const std::string& predictor, const std::optional<std::string>& base,
         const std::vector<double>& times, const Vector& x_T, bool afs, const std::string& kind) {
        std::optional<SolverKind> b;
        if (base) b = SolverKind::parse(*base);
        return unpack(amed_sample(g, load_predictor(predictor), b, schedule_from(times, kind), x_T, afs));
      },
      py::arg("model"), py::arg("predictor"), py::arg("base") = std::nullopt, py::arg("times"), py::arg("x_T"),
      py::arg("afs") = false, py::arg("kind") = "polynomial");

  m.def(
      "train_amed",
      [](const GaussianMixture& g, const std::vector<double>& times, const std::string& out,
         const std::optional<std::string>& base, int M, int images, int batch, double lr, std::uint64_t seed,
         bool afs, const std::string& kind) {
        TrainConfig cfg;
        if (base) cfg.student_base = SolverKind::parse(*base);
        cfg.M = M;
        cfg.images = images;
        cfg.batch = batch;
        cfg.lr = lr;
        cfg.seed = seed;
        cfg.afs = afs;
        TrainResult res;
        {
          py::gil_scoped_release release;
          res = train(g, cfg, schedule_from(times, kind));
        }
        save_predictor(res.params, out);
        std::vector<double> losses;
        for (const auto& rec : res.losses) losses.push_back(rec.loss);
        return losses;
      },
      py::arg("model"), py::arg("times"), py::arg("out"), py::arg("base") = std::nullopt, py::arg("M") = 1,
      py::arg("images") = 1024, py::arg("batch") = 128, py::arg("lr") = 1e-3, py::arg("seed") = 0,
      py::arg("afs") = false, py::arg("kind") = "polynomial",
      "Trains a step predictor, writes its checkpoint to `out` and returns the per-update losses.");

  m.def(
      "exact_trajectory",
      [](const GaussianMixture& g, const Vector& x_T, double t, double T) { return exact_trajectory(g, x_T, t, T); },
      py::arg("model"), py::arg("x_T"), py::arg("t"), py::arg("T"));

  m.def(
      "sliced_wasserstein",
      [](const Matrix& a, const Matrix& b, int projections, std::uint64_t seed) {
        return sliced_wasserstein(rows(a), rows(b), projections, seed);
      },
      py::arg("a"), py::arg("b"), py::arg("projections") = 64, py::arg("seed") = 0);

  m.def(
      "pca",
      [](const Matrix& states) {
        auto r = pca_states(states);
        return py::make_tuple(r.eigenvalues, r.components, r.mean);
      },
      py::arg("states"), "Returns (eigenvalues, components, mean) of the rows of `states`.");

  m.def(
      "shell_radius",
      [](int d, double s, double t) { return shell_radius(BoundParams::defaults(d), s, t); }, py::arg("d"),
      py::arg("s"), py::arg("t"));

  m.def(
      "mc_shell_check",
      [](int d, double s, double t, int trials, std::uint64_t seed, int substeps) {
        ShellReport r;
        {
          py::gil_scoped_release release;
          r = mc_shell_check(BoundParams::defaults(d), s, t, trials, seed, substeps);
        }
        return py::dict(py::arg("radius") = r.radius, py::arg("mean_norm") = r.mean_norm,
                        py::arg("rel_std") = r.rel_std);
      },
      py::arg("d"), py::arg("s"), py::arg("t"), py::arg("trials") = 1024, py::arg("seed") = 0,
      py::arg("substeps") = 200);

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
