#include "amedlab/predictor.hpp"

#include "amedlab/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>

namespace amedlab {

namespace {

constexpr const char* kCheckpointFormat = "amedlab-predictor";
constexpr int kCheckpointVersion = 1;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

nlohmann::json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Matrix matrix_from(const nlohmann::json& doc, Eigen::Index rows, Eigen::Index cols, const char* name) {
  const auto shape = doc.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = doc.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError(std::string("predictor checkpoint: bad shape for ") + name);
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)];
  return m;
}

template <class Fn>
void for_each_block(const PredictorParams& p, Fn&& fn) {
  fn(p.w1);
  fn(p.b1);
  fn(p.w2);
  fn(p.b2);
  fn(p.w3);
  fn(p.b3);
}

}  // namespace

void PredictorConfig::validate() const {
  if (feature_dim < 1 || hidden < 1) throw ParameterError("predictor: feature_dim and hidden must be positive");
  if (time_embed < 4 || time_embed % 4 != 0) throw ParameterError("predictor: time_embed must be a positive multiple of 4");
}

PredictorParams PredictorParams::zeros(const PredictorConfig& config) {
  config.validate();
  PredictorParams p;
  p.config = config;
  p.w1 = Matrix::Zero(config.hidden, config.feature_dim);
  p.b1 = Vector::Zero(config.hidden);
  p.w2 = Matrix::Zero(config.hidden, config.hidden);
  p.b2 = Vector::Zero(config.hidden);
  p.w3 = Matrix::Zero(config.outputs(), config.hidden + config.time_embed);
  p.b3 = Vector::Zero(config.outputs());
  return p;
}

PredictorParams PredictorParams::neutral(const PredictorConfig& config, std::uint64_t seed) {
  PredictorParams p = zeros(config);
  CounterRng rng(seed, 0x9ED1C702ull);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(config.feature_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = s1 * rng.normal();
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = s2 * rng.normal();
  return p;
}

std::size_t PredictorParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block(*this, [&](const auto& block) { n += static_cast<std::size_t>(block.size()); });
  return n;
}

Vector PredictorParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index offset = 0;
  for_each_block(*this, [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index j = 0; j < block.cols(); ++j) flat[offset++] = block(i, j);
  });
  return flat;
}

void PredictorParams::unflatten(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw ContractError("unflatten: wrong parameter count");
  }
  Eigen::Index offset = 0;
  auto take = [&](auto& block) {
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index j = 0; j < block.cols(); ++j) block(i, j) = flat[offset++];
  };
  take(w1);
  take(b1);
  take(w2);
  take(b2);
  take(w3);
  take(b3);
}

bool PredictorParams::all_finite() const {
  bool ok = true;
  for_each_block(*this, [&](const auto& block) { ok = ok && block.allFinite(); });
  return ok;
}

PredictorParams& PredictorParams::operator+=(const PredictorParams& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  w3 += other.w3;
  b3 += other.b3;
  return *this;
}

PredictorParams& PredictorParams::operator*=(double scale) {
  w1 *= scale;
  b1 *= scale;
  w2 *= scale;
  b2 *= scale;
  w3 *= scale;
  b3 *= scale;
  return *this;
}

Vector time_embedding(int width, double t_hi, double t_lo) {
  if (!(t_hi > 0.0 && t_lo > 0.0)) throw DomainError("time_embedding: times must be positive");
  Vector emb(width);
  const int freqs = width / 4;
  const double logs[2] = {std::log(t_hi), std::log(t_lo)};
  Eigen::Index k = 0;
  for (double lt : logs) {
    for (int j = 0; j < freqs; ++j) {
      const double omega = std::ldexp(0.25, j);
      emb[k++] = std::sin(omega * lt);
      emb[k++] = std::cos(omega * lt);
    }
  }
  return emb;
}

PredictorTape predictor_forward(const PredictorParams& params, const Vector& feature, double t_hi, double t_lo) {
  const auto& cfg = params.config;
  if (feature.size() != cfg.feature_dim) throw ContractError("predict: feature has the wrong width");
  PredictorTape tape;
  tape.feature = feature;
  tape.h1 = (params.w1 * feature + params.b1).array().tanh().matrix();
  tape.h2 = (params.w2 * tape.h1 + params.b2).array().tanh().matrix();
  tape.joined.resize(cfg.hidden + cfg.time_embed);
  tape.joined << tape.h2, time_embedding(cfg.time_embed, t_hi, t_lo);
  tape.logits = params.w3 * tape.joined + params.b3;
  if (!tape.logits.allFinite()) throw EvaluationError("predict: non-finite activations");
  tape.output.r = sigmoid(tape.logits[0]);
  tape.output.c = 2.0 * sigmoid(tape.logits[1]);
  if (cfg.time_scaling) tape.output.a = 0.5 + sigmoid(tape.logits[2]);
  return tape;
}

PredictorOutput predict(const PredictorParams& params, const Vector& feature, double t_hi, double t_lo) {
  return predictor_forward(params, feature, t_hi, t_lo).output;
}

PredictorParams predictor_backward(const PredictorParams& params, const PredictorTape& tape, double d_r,
                                   double d_c, double d_a) {
  const auto& cfg = params.config;
  Vector g_logits(cfg.outputs());
  const double r = tape.output.r;
  const double half_c = 0.5 * tape.output.c;
  g_logits[0] = d_r * r * (1.0 - r);
  g_logits[1] = d_c * 2.0 * half_c * (1.0 - half_c);
  if (cfg.time_scaling) {
    const double sa = *tape.output.a - 0.5;
    g_logits[2] = d_a * sa * (1.0 - sa);
  }
  PredictorParams grad = PredictorParams::zeros(cfg);
  grad.w3 = g_logits * tape.joined.transpose();
  grad.b3 = g_logits;
  const Vector g_h2 = params.w3.leftCols(cfg.hidden).transpose() * g_logits;
  const Vector g_z2 = g_h2.array() * (1.0 - tape.h2.array().square());
  grad.w2 = g_z2 * tape.h1.transpose();
  grad.b2 = g_z2;
  const Vector g_h1 = params.w2.transpose() * g_z2;
  const Vector g_z1 = g_h1.array() * (1.0 - tape.h1.array().square());
  grad.w1 = g_z1 * tape.feature.transpose();
  grad.b1 = g_z1;
  return grad;
}

nlohmann::json predictor_to_json(const PredictorParams& params) {
  const auto& cfg = params.config;
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config",
           {{"feature_dim", cfg.feature_dim},
            {"hidden", cfg.hidden},
            {"time_embed", cfg.time_embed},
            {"time_scaling", cfg.time_scaling}}},
          {"w1", matrix_json(params.w1)},
          {"b1", matrix_json(params.b1)},
          {"w2", matrix_json(params.w2)},
          {"b2", matrix_json(params.b2)},
          {"w3", matrix_json(params.w3)},
          {"b3", matrix_json(params.b3)}};
}

PredictorParams predictor_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) throw ConfigError("not a predictor checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported predictor checkpoint version");
    PredictorConfig cfg;
    const auto& c = doc.at("config");
    cfg.feature_dim = c.at("feature_dim").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.time_embed = c.at("time_embed").get<int>();
    cfg.time_scaling = c.at("time_scaling").get<bool>();
    PredictorParams p = PredictorParams::zeros(cfg);
    p.w1 = matrix_from(doc.at("w1"), cfg.hidden, cfg.feature_dim, "w1");
    p.b1 = matrix_from(doc.at("b1"), cfg.hidden, 1, "b1");
    p.w2 = matrix_from(doc.at("w2"), cfg.hidden, cfg.hidden, "w2");
    p.b2 = matrix_from(doc.at("b2"), cfg.hidden, 1, "b2");
    p.w3 = matrix_from(doc.at("w3"), cfg.outputs(), cfg.hidden + cfg.time_embed, "w3");
    p.b3 = matrix_from(doc.at("b3"), cfg.outputs(), 1, "b3");
    if (!p.all_finite()) throw ConfigError("predictor checkpoint holds non-finite weights");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("predictor checkpoint: ") + e.what());
  }
}

void save_predictor(const PredictorParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write predictor checkpoint '" + path + "'");
  out << predictor_to_json(params).dump(1) << '\n';
}

PredictorParams load_predictor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open predictor checkpoint '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("predictor checkpoint '" + path + "': " + e.what());
  }
  return predictor_from_json(doc);
}

}  // namespace amedlab
