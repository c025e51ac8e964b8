#include "amedlab/solvers.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace amedlab {

namespace {

constexpr std::array<double, 1> kAb1 = {1.0};
constexpr std::array<double, 2> kAb2 = {3.0 / 2.0, -1.0 / 2.0};
constexpr std::array<double, 3> kAb3 = {23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0};
constexpr std::array<double, 4> kAb4 = {55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0};

void check_interval(double t_hi, double t_lo) {
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("solver step: need 0 < t_lo < t_hi");
}

// Slope at the start of a step, either evaluated or supplied (AFS).
struct StartSlope {
  Vector epsilon;
  Vector denoised;
  Vector feature;
};

StartSlope start_slope(const GaussianMixture& model, const Vector& x, double t_hi, const StepOptions& opts,
                       std::vector<Evaluation>& evals) {
  if (opts.start_epsilon) {
    return {*opts.start_epsilon, x - t_hi * *opts.start_epsilon, Vector::Zero(kFeatureWidth)};
  }
  const double t_eval = opts.start_time_scale * t_hi;
  ModelEval e = eval_model(model, x, t_eval);
  evals.push_back({t_eval, e.epsilon});
  return {std::move(e.epsilon), std::move(e.denoised), std::move(e.feature)};
}

Vector evaluate(const GaussianMixture& model, const Vector& x, double t, std::vector<Evaluation>& evals) {
  Vector eps = eval_model(model, x, t).epsilon;
  evals.push_back({t, eps});
  return eps;
}

StepResult finish(Vector x, std::vector<Evaluation> evals, StartSlope start) {
  return {std::move(x), std::move(evals), std::move(start.epsilon), std::move(start.denoised),
          std::move(start.feature)};
}

}  // namespace

SolverKind SolverKind::parse(std::string_view text) {
  SolverKind kind;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  try {
    if (name == "euler" || name == "ddim" || name == "euler_ddim") {
      kind.tag = SolverTag::euler;
    } else if (name == "heun" || name == "edm" || name == "heun_edm") {
      kind.tag = SolverTag::heun;
    } else if (name == "dpm2") {
      kind.tag = SolverTag::dpm2;
      if (!arg.empty()) kind.r = std::stod(arg);
    } else if (name == "ipndm") {
      kind.tag = SolverTag::ipndm;
      if (!arg.empty()) kind.order = std::stoi(arg);
    } else if (name == "dpmpp_2m" || name == "dpmpp") {
      kind.tag = SolverTag::dpmpp_2m;
    } else {
      throw ParameterError("unknown solver '" + std::string(text) + "'");
    }
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ParameterError*>(&e) != nullptr) throw;
    throw ParameterError("bad solver argument in '" + std::string(text) + "'");
  }
  kind.validate();
  return kind;
}

std::string SolverKind::name() const {
  std::ostringstream out;
  switch (tag) {
    case SolverTag::euler: out << "euler"; break;
    case SolverTag::heun: out << "heun"; break;
    case SolverTag::dpm2: out << "dpm2:" << r; break;
    case SolverTag::ipndm: out << "ipndm:" << order; break;
    case SolverTag::dpmpp_2m: out << "dpmpp_2m"; break;
  }
  return out.str();
}

int SolverKind::evals_per_step() const noexcept {
  return (tag == SolverTag::heun || tag == SolverTag::dpm2) ? 2 : 1;
}

void SolverKind::validate() const {
  if (!(r > 0.0 && r <= 1.0)) throw ParameterError("dpm2: r must lie in (0, 1]");
  if (order < 1 || order > 4) throw ParameterError("ipndm: order must be 1..4");
}

void StepPlan::validate(double t_lo, double t_hi) const {
  for (double s : intermediates) {
    if (!(s > t_lo && s < t_hi)) throw ParameterError("step plan: intermediate time outside its interval");
  }
  for (double c : scales) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("step plan: scales must be positive and finite");
  }
  for (double a : time_scales) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("step plan: time scales must be positive and finite");
  }
}

StepResult step_euler(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                      const StepOptions& opts) {
  check_interval(t_hi, t_lo);
  std::vector<Evaluation> evals;
  StartSlope start = start_slope(model, x, t_hi, opts, evals);
  const double h = t_lo - t_hi;
  Vector next = x + (opts.direction_scale * h) * start.epsilon;
  return finish(std::move(next), std::move(evals), std::move(start));
}

StepResult step_heun(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                     const StepOptions& opts) {
  check_interval(t_hi, t_lo);
  std::vector<Evaluation> evals;
  StartSlope start = start_slope(model, x, t_hi, opts, evals);
  const double h = t_lo - t_hi;
  const Vector predicted = x + h * start.epsilon;
  const Vector eps_lo = evaluate(model, predicted, t_lo, evals);
  Vector next = x + (opts.direction_scale * h) * (0.5 * eps_lo + 0.5 * start.epsilon);
  return finish(std::move(next), std::move(evals), std::move(start));
}

StepResult step_dpm2(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo, double r,
                     const StepOptions& opts) {
  check_interval(t_hi, t_lo);
  const double s = geometric_intermediate(t_lo, t_hi, r);
  std::vector<Evaluation> evals;
  StartSlope start = start_slope(model, x, t_hi, opts, evals);
  const Vector x_mid = x + (s - t_hi) * start.epsilon;
  const Vector eps_mid = evaluate(model, x_mid, s, evals);
  const double w_mid = 1.0 / (2.0 * r);
  const double w_start = 1.0 - w_mid;
  const double h = t_lo - t_hi;
  Vector next = x + (opts.direction_scale * h) * (w_mid * eps_mid + w_start * start.epsilon);
  return finish(std::move(next), std::move(evals), std::move(start));
}

std::span<const double> detail::ipndm_coefficients(int order) {
  switch (order) {
    case 1: return kAb1;
    case 2: return kAb2;
    case 3: return kAb3;
    case 4: return kAb4;
    default: throw ParameterError("ipndm: order must be 1..4");
  }
}

StepResult step_ipndm(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                      std::span<const Vector> history, int max_order, const StepOptions& opts) {
  check_interval(t_hi, t_lo);
  if (history.size() > 3) throw ContractError("ipndm: history holds at most 3 past slopes");
  if (max_order < 1 || max_order > 4) throw ParameterError("ipndm: order must be 1..4");
  std::vector<Evaluation> evals;
  StartSlope start = start_slope(model, x, t_hi, opts, evals);
  const int order = std::min(static_cast<int>(history.size()) + 1, max_order);
  const auto coef = detail::ipndm_coefficients(order);
  Vector direction = coef[0] * start.epsilon;
  for (int i = 1; i < order; ++i) direction += coef[static_cast<std::size_t>(i)] * history[static_cast<std::size_t>(i - 1)];
  const double h = t_lo - t_hi;
  Vector next = x + (opts.direction_scale * h) * direction;
  return finish(std::move(next), std::move(evals), std::move(start));
}

StepResult step_dpmpp_2m(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                         const std::optional<DenoisedRecord>& prev, const StepOptions& opts) {
  check_interval(t_hi, t_lo);
  if (prev && !(prev->t > t_hi)) throw ContractError("dpmpp_2m: previous record must be at a later time");
  std::vector<Evaluation> evals;
  StartSlope start = start_slope(model, x, t_hi, opts, evals);
  const double lambda_hi = -std::log(t_hi);
  const double h = -std::log(t_lo) - lambda_hi;
  if (!std::isfinite(h)) throw DomainError("dpmpp_2m: non-finite log-step");
  const double decay = std::expm1(-h);  // e^{-h} - 1
  Vector combined;
  if (prev) {
    const double r0 = (lambda_hi - (-std::log(prev->t))) / h;
    const double w = 1.0 / (2.0 * r0);
    combined = (1.0 + w) * start.denoised - w * prev->denoised;
  } else {
    combined = start.denoised;
  }
  Vector next = (t_lo / t_hi) * x - (opts.direction_scale * decay) * combined;
  return finish(std::move(next), std::move(evals), std::move(start));
}

StepResult step_base(const GaussianMixture& model, const SolverKind& kind, const Vector& x, double t_hi,
                     double t_lo, SolverCarry& carry, const StepOptions& opts) {
  switch (kind.tag) {
    case SolverTag::euler:
      return step_euler(model, x, t_hi, t_lo, opts);
    case SolverTag::heun:
      return step_heun(model, x, t_hi, t_lo, opts);
    case SolverTag::dpm2:
      return step_dpm2(model, x, t_hi, t_lo, kind.r, opts);
    case SolverTag::ipndm: {
      const std::size_t keep = static_cast<std::size_t>(std::max(0, kind.order - 1));
      if (carry.history.size() > keep) carry.history.resize(keep);
      StepResult res = step_ipndm(model, x, t_hi, t_lo, carry.history, kind.order, opts);
      carry.history.insert(carry.history.begin(), res.start_epsilon);
      if (carry.history.size() > 3) carry.history.pop_back();
      return res;
    }
    case SolverTag::dpmpp_2m: {
      StepResult res = step_dpmpp_2m(model, x, t_hi, t_lo, carry.prev, opts);
      carry.prev = DenoisedRecord{t_hi, res.start_denoised};
      return res;
    }
  }
  throw ParameterError("unknown solver tag");
}

Vector afs_direction(const Vector& x, double t) {
  if (!(t > 0.0)) throw DomainError("afs_direction: t must be positive");
  return x / t;
}

Trajectory sample(const GaussianMixture& model, const SolverKind& kind, const TimeSchedule& schedule,
                  const Vector& x_T) {
  kind.validate();
  if (x_T.size() != model.dim()) throw ContractError("sample: x_T has the wrong dimension");
  Trajectory traj;
  traj.nodes.reserve(schedule.size());
  traj.nodes.push_back({schedule.t_max(), x_T});
  SolverCarry carry;
  Vector x = x_T;
  for (std::size_t n = schedule.size() - 1; n > 0; --n) {
    const double t_hi = schedule[n];
    const double t_lo = schedule[n - 1];
    StepOptions opts;
    if (kind.afs && n + 1 == schedule.size()) opts.start_epsilon = afs_direction(x, t_hi);
    StepResult res = step_base(model, kind, x, t_hi, t_lo, carry, opts);
    if (!res.x.allFinite()) {
      throw DivergenceError("sample(" + kind.name() + ") diverged on interval [" + std::to_string(t_lo) + ", " +
                            std::to_string(t_hi) + "]");
    }
    traj.nfe += static_cast<int>(res.evals.size());
    for (auto& e : res.evals) traj.evals.push_back(std::move(e));
    x = std::move(res.x);
    traj.nodes.push_back({t_lo, x});
  }
  return traj;
}

int expected_nfe(const SolverKind& kind, int num_nodes) {
  return kind.evals_per_step() * (num_nodes - 1) - (kind.afs ? 1 : 0);
}

}  // namespace amedlab
