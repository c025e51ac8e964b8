#pragma once

#include "amedlab/common.hpp"
#include "amedlab/schedule.hpp"
#include "amedlab/trajectory.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace amedlab {

class CounterRng;

/// Width of the feature vector handed to the AMED predictor.
inline constexpr int kFeatureWidth = 16;

/// Isotropic Gaussian mixture data distribution p_0. Under the variance-exploding
/// kernel x_t = x_0 + t * noise each component widens to std sqrt(s_k^2 + t^2),
/// so the perturbed marginal stays a mixture and its score is closed-form.
///
/// Immutable after construction; evaluation is safe from any number of threads.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<Vector> means, std::vector<double> stds);

  static GaussianMixture single(Vector mean, double std);

  [[nodiscard]] int num_components() const noexcept { return static_cast<int>(weights_.size()); }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::vector<Vector>& means() const noexcept { return means_; }
  [[nodiscard]] const std::vector<double>& stds() const noexcept { return stds_; }

  /// When set, eval_model reports an all-zero feature vector (no-bottleneck ablation).
  [[nodiscard]] bool zero_feature() const noexcept { return zero_feature_; }
  [[nodiscard]] GaussianMixture with_zero_feature(bool on) const;

  /// Exact draws from the unperturbed data distribution.
  [[nodiscard]] std::vector<Vector> sample_data(CounterRng& rng, std::size_t count) const;

 private:
  std::vector<double> weights_;
  std::vector<Vector> means_;
  std::vector<double> stds_;
  int dim_ = 0;
  bool zero_feature_ = false;
};

struct ModelEval {
  Vector epsilon;   ///< noise prediction
  Vector denoised;  ///< data prediction, always x - t * epsilon
  Vector feature;   ///< posterior responsibilities, zero-padded to kFeatureWidth
};

/// Softmax of log-weights computed with the max-shift trick.
Vector stable_softmax(std::span<const double> logits);

/// Posterior responsibilities of each component of the perturbed mixture at time t.
Vector responsibilities(const GaussianMixture& model, const Vector& x, double t);

ModelEval eval_model(const GaussianMixture& model, const Vector& x, double t);

/// Closed-form probability-flow solution for a single-component model, from
/// x_T at time T to time t.
Vector exact_trajectory(const GaussianMixture& model, const Vector& x_T, double t, double T);

/// Classical RK4 on dx/dt = epsilon(x, t). Each schedule interval is split into `substeps`
/// sub-intervals by the schedule's own interpolation rule. Ground truth for mixtures.
Trajectory oracle_solve(const GaussianMixture& model, const Vector& x_T, const TimeSchedule& schedule,
                        int substeps = 128);

GaussianMixture mixture_from_json(const nlohmann::json& doc);
nlohmann::json mixture_to_json(const GaussianMixture& model);
GaussianMixture load_mixture(const std::string& path);

}  // namespace amedlab
