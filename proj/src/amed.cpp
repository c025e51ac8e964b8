#include "amedlab/amed.hpp"

#include "amedlab/parallel.hpp"
#include "amedlab/rng.hpp"

#include <cmath>

namespace amedlab {

IntervalStart interval_start(const GaussianMixture& model, const Vector& x, double t_hi, bool afs) {
  IntervalStart start;
  if (afs) {
    start.epsilon = afs_direction(x, t_hi);
    start.denoised = x - t_hi * start.epsilon;
    start.feature = Vector::Zero(kFeatureWidth);
    return start;
  }
  ModelEval e = eval_model(model, x, t_hi);
  start.eval = Evaluation{t_hi, e.epsilon};
  start.epsilon = std::move(e.epsilon);
  start.denoised = std::move(e.denoised);
  start.feature = std::move(e.feature);
  return start;
}

StepPlan plan_from(const PredictorOutput& out, double t_hi, double t_lo) {
  StepPlan plan;
  plan.intermediates = {geometric_intermediate(t_lo, t_hi, out.r)};
  plan.scales = {out.c};
  plan.time_scales = {out.a.value_or(1.0)};
  return plan;
}

StepResult amed_apply(const GaussianMixture& model, const IntervalStart& start, const Vector& x, double t_hi,
                      double t_lo, const PredictorOutput& out) {
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("amed step: need 0 < t_lo < t_hi");
  const double s = geometric_intermediate(t_lo, t_hi, out.r);
  const double a = out.a.value_or(1.0);
  StepResult res;
  if (start.eval) res.evals.push_back(*start.eval);
  const Vector x_mid = x + (s - t_hi) * start.epsilon;
  const double t_eval = a * s;
  const Vector eps_mid = eval_model(model, x_mid, t_eval).epsilon;
  res.evals.push_back({t_eval, eps_mid});
  const double h = t_lo - t_hi;
  res.x = x + (out.c * h) * eps_mid;
  res.start_epsilon = start.epsilon;
  res.start_denoised = start.denoised;
  res.start_feature = start.feature;
  return res;
}

StepResult plugin_apply(const GaussianMixture& model, const SolverKind& base, const IntervalStart& start,
                        const Vector& x, double t_hi, double t_lo, const PredictorOutput& out, SolverCarry& carry) {
  const double s = geometric_intermediate(t_lo, t_hi, out.r);
  StepOptions first;
  first.start_epsilon = start.epsilon;
  StepResult head = step_base(model, base, x, t_hi, s, carry, first);
  if (!head.x.allFinite()) throw DivergenceError("amed plugin: first substep diverged");
  // r = 1 puts s on t_lo; the second substep has zero length and is skipped
  StepResult tail;
  tail.x = head.x;
  if (s > t_lo) {
    StepOptions second;
    second.direction_scale = out.c;
    second.start_time_scale = out.a.value_or(1.0);
    tail = step_base(model, base, head.x, s, t_lo, carry, second);
  }

  StepResult res;
  if (start.eval) res.evals.push_back(*start.eval);
  for (auto& e : head.evals) res.evals.push_back(std::move(e));
  for (auto& e : tail.evals) res.evals.push_back(std::move(e));
  res.x = std::move(tail.x);
  res.start_epsilon = start.epsilon;
  res.start_denoised = start.denoised;
  res.start_feature = start.feature;
  return res;
}

StepResult amed_step(const GaussianMixture& model, const PredictorParams& params, const Vector& x, double t_hi,
                     double t_lo, bool afs) {
  const IntervalStart start = interval_start(model, x, t_hi, afs);
  return amed_apply(model, start, x, t_hi, t_lo, predict(params, start.feature, t_hi, t_lo));
}

StepResult amed_plugin_step(const GaussianMixture& model, const PredictorParams& params, const SolverKind& base,
                            const Vector& x, double t_hi, double t_lo, SolverCarry& carry, bool afs) {
  const IntervalStart start = interval_start(model, x, t_hi, afs);
  return plugin_apply(model, base, start, x, t_hi, t_lo, predict(params, start.feature, t_hi, t_lo), carry);
}

Trajectory amed_sample(const GaussianMixture& model, const PredictorParams& params,
                       const std::optional<SolverKind>& base, const TimeSchedule& schedule, const Vector& x_T,
                       bool afs) {
  if (x_T.size() != model.dim()) throw ContractError("amed_sample: x_T has the wrong dimension");
  if (base) base->validate();
  Trajectory traj;
  traj.nodes.push_back({schedule.t_max(), x_T});
  SolverCarry carry;
  Vector x = x_T;
  for (std::size_t n = schedule.size() - 1; n > 0; --n) {
    const double t_hi = schedule[n];
    const double t_lo = schedule[n - 1];
    const bool first_afs = afs && n + 1 == schedule.size();
    StepResult res = base ? amed_plugin_step(model, params, *base, x, t_hi, t_lo, carry, first_afs)
                          : amed_step(model, params, x, t_hi, t_lo, first_afs);
    if (!res.x.allFinite()) {
      throw DivergenceError("amed_sample diverged on interval [" + std::to_string(t_lo) + ", " +
                            std::to_string(t_hi) + "]");
    }
    traj.nfe += static_cast<int>(res.evals.size());
    for (auto& e : res.evals) traj.evals.push_back(std::move(e));
    x = std::move(res.x);
    traj.nodes.push_back({t_lo, x});
  }
  return traj;
}

int amed_expected_nfe(const std::optional<SolverKind>& base, int num_nodes, bool afs) {
  const int per_interval = base ? 2 * base->evals_per_step() : 2;
  return per_interval * (num_nodes - 1) - (afs ? 1 : 0);
}

void TrainConfig::validate() const {
  if (M < 1) throw ParameterError("train: M must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("train: lr must be finite and non-negative");
  if (batch < 1) throw ParameterError("train: batch must be >= 1");
  if (images < 0) throw ParameterError("train: images must be >= 0");
  teacher.validate();
  if (student_base) student_base->validate();
  predictor.validate();
}

namespace {

struct SampleOutcome {
  double loss = 0.0;
  Vector x_next;
  SolverCarry carry;
};

// One student step for one sample under a fixed predictor output.
SampleOutcome student_outcome(const GaussianMixture& model, const std::optional<SolverKind>& base,
                              const IntervalStart& start, const Vector& x, const SolverCarry& carry, double t_hi,
                              double t_lo, const PredictorOutput& out, const Vector& target) {
  SampleOutcome o;
  o.carry = carry;
  StepResult res = base ? plugin_apply(model, *base, start, x, t_hi, t_lo, out, o.carry)
                        : amed_apply(model, start, x, t_hi, t_lo, out);
  o.loss = (res.x - target).norm();
  o.x_next = std::move(res.x);
  return o;
}

// Central difference of the sample loss in one output coordinate.
double output_sensitivity(const GaussianMixture& model, const std::optional<SolverKind>& base,
                          const IntervalStart& start, const Vector& x, const SolverCarry& carry, double t_hi,
                          double t_lo, const PredictorOutput& out, const Vector& target, int which) {
  auto get = [which](const PredictorOutput& o) { return which == 0 ? o.r : which == 1 ? o.c : *o.a; };
  auto set = [which](PredictorOutput& o, double v) {
    if (which == 0) o.r = v;
    else if (which == 1) o.c = v;
    else o.a = v;
  };
  const double v = get(out);
  const double step = 1e-3 * std::abs(v);
  PredictorOutput plus = out;
  PredictorOutput minus = out;
  double span = 2.0 * step;
  if (which == 0 && v + step > 1.0) {
    // r must stay in (0, 1]: fall back to a one-sided difference
    span = step;
    set(minus, v - step);
  } else {
    set(plus, v + step);
    set(minus, v - step);
  }
  const double up = student_outcome(model, base, start, x, carry, t_hi, t_lo, plus, target).loss;
  const double down = student_outcome(model, base, start, x, carry, t_hi, t_lo, minus, target).loss;
  return (up - down) / span;
}

void check_batch(const StudentBatch& batch) {
  if (batch.x.size() != batch.target.size() || batch.x.size() != batch.carry.size()) {
    throw ContractError("student batch: x, carry and target sizes differ");
  }
  if (batch.x.empty()) throw ContractError("student batch is empty");
}

}  // namespace

StepLoss student_step_loss(const GaussianMixture& model, const PredictorParams& params,
                           const std::optional<SolverKind>& base, const StudentBatch& batch, double t_hi, double t_lo,
                           unsigned threads) {
  check_batch(batch);
  const std::size_t count = batch.x.size();
  std::vector<SampleOutcome> outcomes(count);
  std::vector<PredictorParams> grads(count);
  parallel_for(
      count,
      [&](std::size_t b) {
        const IntervalStart start = interval_start(model, batch.x[b], t_hi, batch.afs);
        const PredictorTape tape = predictor_forward(params, start.feature, t_hi, t_lo);
        outcomes[b] = student_outcome(model, base, start, batch.x[b], batch.carry[b], t_hi, t_lo, tape.output,
                                      batch.target[b]);
        double sens[3] = {0.0, 0.0, 0.0};
        const int outputs = params.config.outputs();
        for (int k = 0; k < outputs; ++k) {
          sens[k] = output_sensitivity(model, base, start, batch.x[b], batch.carry[b], t_hi, t_lo, tape.output,
                                       batch.target[b], k);
        }
        grads[b] = predictor_backward(params, tape, sens[0], sens[1], sens[2]);
      },
      threads);

  StepLoss result;
  result.gradient = PredictorParams::zeros(params.config);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t b = 0; b < count; ++b) {
    if (!std::isfinite(outcomes[b].loss)) throw DivergenceError("student step produced a non-finite loss");
    result.loss += outcomes[b].loss;
    result.gradient += grads[b];
    result.x_next.push_back(std::move(outcomes[b].x_next));
    result.carry_next.push_back(std::move(outcomes[b].carry));
  }
  result.loss *= inv;
  result.gradient *= inv;
  return result;
}

double student_step_loss_value(const GaussianMixture& model, const PredictorParams& params,
                               const std::optional<SolverKind>& base, const StudentBatch& batch, double t_hi,
                               double t_lo) {
  check_batch(batch);
  double total = 0.0;
  for (std::size_t b = 0; b < batch.x.size(); ++b) {
    const IntervalStart start = interval_start(model, batch.x[b], t_hi, batch.afs);
    const PredictorOutput out = predict(params, start.feature, t_hi, t_lo);
    total += student_outcome(model, base, start, batch.x[b], batch.carry[b], t_hi, t_lo, out, batch.target[b]).loss;
  }
  return total / static_cast<double>(batch.x.size());
}

std::vector<Vector> teacher_nodes(const GaussianMixture& model, const SolverKind& teacher,
                                  const TimeSchedule& schedule, int M, const Vector& x_T) {
  const TimeSchedule fine = refine_teacher(schedule, M);
  SolverKind kind = teacher;
  kind.afs = false;
  const Trajectory traj = sample(model, kind, fine, x_T);
  std::vector<Vector> out;
  out.reserve(schedule.size());
  for (std::size_t i = 0; i < traj.nodes.size(); i += static_cast<std::size_t>(M + 1)) out.push_back(traj.nodes[i].x);
  return out;
}

TrainResult train(const GaussianMixture& model, const TrainConfig& cfg, const TimeSchedule& schedule) {
  return train(model, cfg, schedule, PredictorParams::neutral(cfg.predictor, cfg.seed));
}

TrainResult train(const GaussianMixture& model, const TrainConfig& cfg, const TimeSchedule& schedule,
                  PredictorParams init) {
  cfg.validate();
  if (init.config.feature_dim != cfg.predictor.feature_dim || init.config.outputs() != cfg.predictor.outputs()) {
    throw ContractError("train: initial parameters do not match the predictor config");
  }
  TrainResult result;
  result.params = std::move(init);
  const CounterRng root(cfg.seed, 0x7EA1ull);
  const int last = static_cast<int>(schedule.size()) - 1;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch);

  for (int loop = 0; loop < cfg.loops(); ++loop) {
    const CounterRng loop_rng = root.derive(static_cast<std::uint64_t>(loop));
    std::vector<Vector> x_T(batch);
    std::vector<std::vector<Vector>> teacher(batch);
    parallel_for(
        batch,
        [&](std::size_t b) {
          CounterRng rng = loop_rng.derive(b);
          Vector x(model.dim());
          for (int j = 0; j < model.dim(); ++j) x[j] = schedule.t_max() * rng.normal();
          teacher[b] = teacher_nodes(model, cfg.teacher, schedule, cfg.M, x);
          x_T[b] = std::move(x);
        },
        cfg.threads);

    StudentBatch student;
    student.x = std::move(x_T);
    student.carry.assign(batch, SolverCarry{});
    student.target.resize(batch);
    for (int n = last; n >= 1; --n) {
      // teacher nodes are stored from t_N downwards
      for (std::size_t b = 0; b < batch; ++b) student.target[b] = teacher[b][static_cast<std::size_t>(last - n + 1)];
      student.afs = cfg.afs && n == last;
      StepLoss step = student_step_loss(model, result.params, cfg.student_base, student, schedule[static_cast<std::size_t>(n)],
                                        schedule[static_cast<std::size_t>(n - 1)], cfg.threads);
      result.losses.push_back({loop, n, step.loss});
      step.gradient *= -cfg.lr;
      result.params += step.gradient;
      ++result.updates;
      if (!result.params.all_finite()) throw DivergenceError("train: parameters became non-finite");
      student.x = std::move(step.x_next);
      student.carry = std::move(step.carry_next);
    }
  }
  return result;
}

}  // namespace amedlab
