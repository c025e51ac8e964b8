#pragma once

#include "amedlab/common.hpp"
#include "amedlab/score_model.hpp"

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace amedlab {

struct PredictorConfig {
  int feature_dim = kFeatureWidth;
  int hidden = 32;
  int time_embed = 16;  ///< sinusoidal features for (t_hi, t_lo); multiple of 4
  bool time_scaling = false;

  [[nodiscard]] int outputs() const noexcept { return time_scaling ? 3 : 2; }
  void validate() const;
};

/// Weights of the step predictor. Layers are stored output-major (W * input):
///   h1 = tanh(w1 * feature + b1)
///   h2 = tanh(w2 * h1 + b2)
///   logits = w3 * [h2; time_embedding(t_hi, t_lo)] + b3
struct PredictorParams {
  PredictorConfig config;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Matrix w3;
  Vector b3;

  static PredictorParams zeros(const PredictorConfig& config);
  /// Random hidden layers and an all-zero output layer. The output is then the
  /// neutral point r = 0.5, c = 1, a = 1 for every input, but gradients reach
  /// the feature path from the first update.
  static PredictorParams neutral(const PredictorConfig& config, std::uint64_t seed);

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] Vector flatten() const;
  void unflatten(const Vector& flat);
  [[nodiscard]] bool all_finite() const;

  PredictorParams& operator+=(const PredictorParams& other);
  PredictorParams& operator*=(double scale);
};

struct PredictorOutput {
  double r = 0.5;  ///< in (0, 1); the intermediate time is t_lo^r * t_hi^(1-r)
  double c = 1.0;  ///< direction scale in (0, 2)
  std::optional<double> a;  ///< evaluation-time scale in (0.5, 1.5), when enabled
};

Vector time_embedding(int width, double t_hi, double t_lo);

/// Intermediate activations kept for backpropagation.
struct PredictorTape {
  Vector feature;
  Vector h1;
  Vector h2;
  Vector joined;  ///< [h2; embedding]
  Vector logits;
  PredictorOutput output;
};

PredictorTape predictor_forward(const PredictorParams& params, const Vector& feature, double t_hi, double t_lo);
PredictorOutput predict(const PredictorParams& params, const Vector& feature, double t_hi, double t_lo);

/// Parameter gradient of a scalar loss given its sensitivities to the outputs.
PredictorParams predictor_backward(const PredictorParams& params, const PredictorTape& tape, double d_r,
                                   double d_c, double d_a);

nlohmann::json predictor_to_json(const PredictorParams& params);
PredictorParams predictor_from_json(const nlohmann::json& doc);
void save_predictor(const PredictorParams& params, const std::string& path);
PredictorParams load_predictor(const std::string& path);

}  // namespace amedlab
