#pragma once

#include "amedlab/predictor.hpp"
#include "amedlab/schedule.hpp"
#include "amedlab/score_model.hpp"
#include "amedlab/solvers.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace amedlab {

/// Slope at the start of an interval. Its feature vector drives the predictor;
/// under AFS the slope is x / t, nothing is evaluated and the feature is zero.
struct IntervalStart {
  Vector epsilon;
  Vector denoised;
  Vector feature;
  std::optional<Evaluation> eval;
};

IntervalStart interval_start(const GaussianMixture& model, const Vector& x, double t_hi, bool afs);

/// Step plan (intermediate time, direction scale, time scale) implied by a predictor output.
StepPlan plan_from(const PredictorOutput& out, double t_hi, double t_lo);

/// Mean-direction step: Euler to s, then x + c (t_lo - t_hi) eps(x_s, a s).
StepResult amed_apply(const GaussianMixture& model, const IntervalStart& start, const Vector& x, double t_hi,
                      double t_lo, const PredictorOutput& out);

/// Base-solver substeps t_hi -> s and s -> t_lo; the second one is scaled by c
/// and evaluates the model at a * s. `carry` is threaded through both substeps;
/// at r = 1 the second substep has zero length and is skipped.
StepResult plugin_apply(const GaussianMixture& model, const SolverKind& base, const IntervalStart& start,
                        const Vector& x, double t_hi, double t_lo, const PredictorOutput& out, SolverCarry& carry);

StepResult amed_step(const GaussianMixture& model, const PredictorParams& params, const Vector& x, double t_hi,
                     double t_lo, bool afs = false);
StepResult amed_plugin_step(const GaussianMixture& model, const PredictorParams& params, const SolverKind& base,
                            const Vector& x, double t_hi, double t_lo, SolverCarry& carry, bool afs = false);

/// Without a base this is the AMED-Solver, with one the AMED-Plugin.
Trajectory amed_sample(const GaussianMixture& model, const PredictorParams& params,
                       const std::optional<SolverKind>& base, const TimeSchedule& schedule, const Vector& x_T,
                       bool afs = false);

int amed_expected_nfe(const std::optional<SolverKind>& base, int num_nodes, bool afs);

enum class DistanceMetric { l2 };

struct TrainConfig {
  SolverKind teacher{SolverTag::dpm2};
  std::optional<SolverKind> student_base;  ///< empty: AMED-Solver
  int M = 1;
  int batch = 128;
  int images = 10000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool afs = false;
  PredictorConfig predictor;
  DistanceMetric metric = DistanceMetric::l2;
  unsigned threads = 0;  ///< 0: hardware concurrency; results do not depend on it

  [[nodiscard]] int loops() const noexcept { return batch > 0 ? (images + batch - 1) / batch : 0; }
  void validate() const;
};

struct LossRecord {
  int loop = 0;
  int step = 0;  ///< n of the target time t_n (1-based, N-1 down to 1)
  double loss = 0.0;
};

struct TrainResult {
  PredictorParams params;
  std::vector<LossRecord> losses;
  int updates = 0;
};

/// Student states entering one training step.
struct StudentBatch {
  std::vector<Vector> x;
  std::vector<SolverCarry> carry;
  std::vector<Vector> target;
  bool afs = false;  ///< first interval: use the AFS slope
};

struct StepLoss {
  double loss = 0.0;
  PredictorParams gradient;
  std::vector<Vector> x_next;
  std::vector<SolverCarry> carry_next;
};

/// Batch-mean L2 loss of one student step and its parameter gradient: exact
/// backprop through the predictor chained with central finite differences of
/// each sample's loss in the scalar outputs (relative step 1e-3).
StepLoss student_step_loss(const GaussianMixture& model, const PredictorParams& params,
                           const std::optional<SolverKind>& base, const StudentBatch& batch, double t_hi, double t_lo,
                           unsigned threads = 0);

/// Forward-only loss value of student_step_loss.
double student_step_loss_value(const GaussianMixture& model, const PredictorParams& params,
                               const std::optional<SolverKind>& base, const StudentBatch& batch, double t_hi,
                               double t_lo);

/// Teacher states at the student's schedule nodes (descending time).
std::vector<Vector> teacher_nodes(const GaussianMixture& model, const SolverKind& teacher,
                                  const TimeSchedule& schedule, int M, const Vector& x_T);

/// Distillation training: per loop draw a batch of x_T, build teacher
/// trajectories on the refined schedule, then for n = N-1 .. 1 take one student
/// step, compute the loss against the teacher state and apply one gradient
/// descent update. The student continues from its own states.
TrainResult train(const GaussianMixture& model, const TrainConfig& cfg, const TimeSchedule& schedule);
TrainResult train(const GaussianMixture& model, const TrainConfig& cfg, const TimeSchedule& schedule,
                  PredictorParams init);

}  // namespace amedlab
