#include "amedlab/score_model.hpp"

#include "amedlab/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace amedlab {

Matrix Trajectory::state_matrix() const {
  if (nodes.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(nodes.size()), nodes.front().x.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = nodes[i].x.transpose();
  return m;
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vector> means,
                                 std::vector<double> stds)
    : weights_(std::move(weights)), means_(std::move(means)), stds_(std::move(stds)) {
  if (weights_.empty()) throw ParameterError("mixture needs at least one component");
  if (weights_.size() != means_.size() || weights_.size() != stds_.size()) {
    throw ParameterError("mixture weights, means and stds must have equal length");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ParameterError("mixture weights must be strictly positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("mixture weights must sum to 1");
  for (double s : stds_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("mixture stds must be strictly positive");
  }
  dim_ = static_cast<int>(means_.front().size());
  if (dim_ == 0) throw ParameterError("mixture means must be non-empty");
  for (const auto& m : means_) {
    if (m.size() != dim_) throw ParameterError("all mixture means must share one dimension");
    if (!m.allFinite()) throw ParameterError("mixture means must be finite");
  }
}

GaussianMixture GaussianMixture::single(Vector mean, double std) {
  return GaussianMixture({1.0}, {std::move(mean)}, {std});
}

GaussianMixture GaussianMixture::with_zero_feature(bool on) const {
  GaussianMixture copy = *this;
  copy.zero_feature_ = on;
  return copy;
}

std::vector<Vector> GaussianMixture::sample_data(CounterRng& rng, std::size_t count) const {
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double cumulative = weights_[0];
    while (u >= cumulative && k + 1 < weights_.size()) cumulative += weights_[++k];
    Vector x(dim_);
    for (int j = 0; j < dim_; ++j) x[j] = means_[k][j] + stds_[k] * rng.normal();
    out.push_back(std::move(x));
  }
  return out;
}

Vector stable_softmax(std::span<const double> logits) {
  Vector out(static_cast<Eigen::Index>(logits.size()));
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = std::exp(logits[k] - top);
    total += out[static_cast<Eigen::Index>(k)];
  }
  return out / total;
}

namespace {

void check_eval_args(const GaussianMixture& model, const Vector& x, double t) {
  if (!std::isfinite(t)) throw EvaluationError("eval_model: non-finite t");
  if (!(t > 0.0)) throw DomainError("eval_model: t must be positive");
  if (x.size() != model.dim()) throw ContractError("eval_model: x has the wrong dimension");
  if (!x.allFinite()) throw EvaluationError("eval_model: non-finite x");
}

}  // namespace

Vector responsibilities(const GaussianMixture& model, const Vector& x, double t) {
  check_eval_args(model, x, t);
  const int K = model.num_components();
  std::vector<double> logits(static_cast<std::size_t>(K));
  const double half_dim = 0.5 * model.dim();
  for (int k = 0; k < K; ++k) {
    const double var = model.stds()[k] * model.stds()[k] + t * t;
    logits[static_cast<std::size_t>(k)] = std::log(model.weights()[k]) - half_dim * std::log(var) -
                                          0.5 * (x - model.means()[k]).squaredNorm() / var;
  }
  return stable_softmax(logits);
}

ModelEval eval_model(const GaussianMixture& model, const Vector& x, double t) {
  const Vector gamma = responsibilities(model, x, t);
  ModelEval out;
  out.epsilon = Vector::Zero(model.dim());
  for (int k = 0; k < model.num_components(); ++k) {
    const double var = model.stds()[k] * model.stds()[k] + t * t;
    out.epsilon += (gamma[k] / var) * (x - model.means()[k]);
  }
  out.epsilon *= t;
  out.denoised = x - t * out.epsilon;
  out.feature = Vector::Zero(kFeatureWidth);
  if (!model.zero_feature()) {
    const int width = std::min<int>(kFeatureWidth, model.num_components());
    out.feature.head(width) = gamma.head(width);
  }
  if (!out.epsilon.allFinite()) throw EvaluationError("eval_model: non-finite epsilon");
  return out;
}

Vector exact_trajectory(const GaussianMixture& model, const Vector& x_T, double t, double T) {
  if (model.num_components() != 1) {
    throw UnsupportedModelError("exact_trajectory: closed form exists only for single-component models");
  }
  if (!(t > 0.0 && t <= T)) throw DomainError("exact_trajectory: need 0 < t <= T");
  const double s2 = model.stds()[0] * model.stds()[0];
  const Vector& mu = model.means()[0];
  return mu + (x_T - mu) * std::sqrt((s2 + t * t) / (s2 + T * T));
}

Trajectory oracle_solve(const GaussianMixture& model, const Vector& x_T, const TimeSchedule& schedule,
                        int substeps) {
  if (substeps < 32) throw ParameterError("oracle_solve: substeps must be >= 32");
  // sub-intervals follow the schedule's own interpolation rule
  const TimeSchedule fine = refine_teacher(schedule, substeps - 1);
  Trajectory traj;
  Vector x = x_T;
  traj.nodes.push_back({schedule.t_max(), x});
  for (std::size_t n = schedule.size() - 1; n > 0; --n) {
    const double t_lo = schedule[n - 1];
    const double t_hi = schedule[n];
    const std::size_t top = n * static_cast<std::size_t>(substeps);
    for (int j = 0; j < substeps; ++j) {
      const double t = fine[top - j];
      const double t_next = fine[top - j - 1];
      const double half = 0.5 * (t + t_next);
      const double step = t_next - t;
      const Vector k1 = eval_model(model, x, t).epsilon;
      const Vector k2 = eval_model(model, x + 0.5 * step * k1, half).epsilon;
      const Vector k3 = eval_model(model, x + 0.5 * step * k2, half).epsilon;
      const Vector k4 = eval_model(model, x + step * k3, t_next).epsilon;
      x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      traj.nfe += 4;
      if (!x.allFinite()) {
        throw DivergenceError("oracle_solve diverged on interval [" + std::to_string(t_lo) + ", " +
                              std::to_string(t_hi) + "]");
      }
    }
    traj.nodes.push_back({t_lo, x});
  }
  return traj;
}

GaussianMixture mixture_from_json(const nlohmann::json& doc) {
  const nlohmann::json& list = doc.is_object() ? doc.at("components") : doc;
  if (!list.is_array() || list.empty()) throw ConfigError("model config: expected a non-empty component list");
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<double> stds;
  try {
    for (const auto& c : list) {
      weights.push_back(c.at("weight").get<double>());
      const auto mean = c.at("mean").get<std::vector<double>>();
      means.emplace_back(Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size())));
      stds.push_back(c.at("std").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return GaussianMixture(std::move(weights), std::move(means), std::move(stds));
}

nlohmann::json mixture_to_json(const GaussianMixture& model) {
  nlohmann::json list = nlohmann::json::array();
  for (int k = 0; k < model.num_components(); ++k) {
    const auto& m = model.means()[k];
    list.push_back({{"weight", model.weights()[k]},
                    {"mean", std::vector<double>(m.data(), m.data() + m.size())},
                    {"std", model.stds()[k]}});
  }
  return {{"components", list}};
}

GaussianMixture load_mixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model config '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model config '" + path + "': " + e.what());
  }
  return mixture_from_json(doc);
}

}  // namespace amedlab
