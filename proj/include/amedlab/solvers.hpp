#pragma once

#include "amedlab/common.hpp"
#include "amedlab/schedule.hpp"
#include "amedlab/score_model.hpp"
#include "amedlab/trajectory.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amedlab {

enum class SolverTag { euler, heun, dpm2, ipndm, dpmpp_2m };

struct SolverKind {
  SolverTag tag = SolverTag::euler;
  double r = 0.5;     ///< dpm2 intermediate location, in (0, 1]
  int order = 4;      ///< ipndm maximum order, 1..4
  bool afs = false;   ///< analytical first step

  /// Accepts euler|ddim, heun|edm, dpm2[:r], ipndm[:order], dpmpp_2m|dpmpp.
  static SolverKind parse(std::string_view text);
  [[nodiscard]] std::string name() const;
  /// Model evaluations per schedule interval (before the AFS saving).
  [[nodiscard]] int evals_per_step() const noexcept;
  void validate() const;
};

/// Intermediate times, direction scales and evaluation-time scales used inside
/// one solver step.
struct StepPlan {
  std::vector<double> intermediates;
  std::vector<double> scales;
  std::vector<double> time_scales;

  /// Throws ParameterError unless every intermediate lies strictly inside
  /// (t_lo, t_hi) and every scale is positive and finite.
  void validate(double t_lo, double t_hi) const;
};

/// Data prediction recorded by DPM-Solver++(2M) for its next step.
struct DenoisedRecord {
  double t = 0.0;
  Vector denoised;
};

/// Per-trajectory state threaded between steps of multistep solvers.
struct SolverCarry {
  std::vector<Vector> history;  ///< past epsilon values, newest first, at most 3
  std::optional<DenoisedRecord> prev;
};

struct StepOptions {
  /// Replaces the model evaluation at (x, t_hi) without counting it (AFS).
  std::optional<Vector> start_epsilon;
  /// Multiplies the final update direction.
  double direction_scale = 1.0;
  /// The first model evaluation of the step is made at start_time_scale * t_hi.
  double start_time_scale = 1.0;
};

struct StepResult {
  Vector x;                       ///< state at t_lo
  std::vector<Evaluation> evals;  ///< model evaluations consumed, in order
  Vector start_epsilon;           ///< slope used at (x, t_hi)
  Vector start_denoised;
  Vector start_feature;           ///< zero when the start slope was supplied
};

StepResult step_euler(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                      const StepOptions& opts = {});
StepResult step_heun(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                     const StepOptions& opts = {});
StepResult step_dpm2(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo, double r,
                     const StepOptions& opts = {});
/// Adams-Bashforth on epsilon with fixed uniform-grid coefficients; history holds
/// past slopes newest first and the order is min(history + 1, max_order).
StepResult step_ipndm(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                      std::span<const Vector> history, int max_order = 4, const StepOptions& opts = {});
/// Second-order multistep data-prediction update with lambda = -log t.
StepResult step_dpmpp_2m(const GaussianMixture& model, const Vector& x, double t_hi, double t_lo,
                         const std::optional<DenoisedRecord>& prev, const StepOptions& opts = {});

/// Dispatches on the kind and updates `carry` for multistep solvers.
StepResult step_base(const GaussianMixture& model, const SolverKind& kind, const Vector& x, double t_hi,
                     double t_lo, SolverCarry& carry, const StepOptions& opts = {});

/// Epsilon substitute for the first step: x / t.
Vector afs_direction(const Vector& x, double t);

Trajectory sample(const GaussianMixture& model, const SolverKind& kind, const TimeSchedule& schedule,
                  const Vector& x_T);

/// Evaluations `kind` needs on an N-node schedule.
int expected_nfe(const SolverKind& kind, int num_nodes);

namespace detail {
/// Ipndm coefficients for the given order (1..4), newest slope first.
std::span<const double> ipndm_coefficients(int order);
}  // namespace detail

}  // namespace amedlab
