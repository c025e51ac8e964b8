#pragma once

#include "amedlab/predictor.hpp"
#include "amedlab/schedule.hpp"
#include "amedlab/score_model.hpp"

#include <cstdint>
#include <vector>

namespace amedlab {

/// Constants of the scaled logistic envelope f(tau) = a (1/(1+e^{-b tau}) - 1/2).
struct BoundParams {
  double a = 1.0;
  double b = 3.0;
  int d = 1;

  /// a = sqrt(3 d) / 15, b = 3.
  static BoundParams defaults(int d);
  void validate() const;
};

double logistic_bound(const BoundParams& params, double tau);

/// Radius of the shell on which the zero-drift SDE dz = (f/sqrt(d)) dw, started
/// at 0 at time t and run down to s, concentrates:
///   r(s, t) = (a / sqrt(b)) sqrt(1/(1+e^{bt}) - 1/(1+e^{bs}) + b (t - s) / 4).
double shell_radius(const BoundParams& params, double s, double t);
/// Per-coordinate variance sigma^2(s, t) = r^2 / d.
double shell_variance(const BoundParams& params, double s, double t);

struct ShellReport {
  double radius = 0.0;
  double mean_norm = 0.0;
  double rel_std = 0.0;
  int trials = 0;
  int substeps = 0;
};

/// Euler-Maruyama simulation of the shell SDE over `trials` independent paths.
ShellReport mc_shell_check(const BoundParams& params, double s, double t, int trials, std::uint64_t seed,
                           int substeps = 200, unsigned threads = 0);

struct BoundStep {
  int step = 0;  ///< n of the target time t_n
  double s = 0.0;
  double t = 0.0;
  double mean_actual = 0.0;
  double max_actual = 0.0;
  double bound = 0.0;  ///< f(s) + f(t) + r(s, t)
  double ratio = 0.0;  ///< mean_actual / bound
  int violations = 0;
  int count = 0;
};

struct BoundReport {
  std::vector<BoundStep> steps;
  double violation_rate = 0.0;
};

/// For every interval, one AMED step from the oracle state at t_{n+1} compared
/// with the oracle state at t_n, against the error envelope.
BoundReport bound_report(const GaussianMixture& model, const TimeSchedule& schedule, const PredictorParams& params,
                         const BoundParams& bound, const std::vector<Vector>& x_T, int oracle_substeps = 128);

}  // namespace amedlab
