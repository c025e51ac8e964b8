#include "amedlab/bounds.hpp"

#include "amedlab/amed.hpp"
#include "amedlab/parallel.hpp"
#include "amedlab/rng.hpp"

#include <cmath>

namespace amedlab {

BoundParams BoundParams::defaults(int d) {
  BoundParams p;
  p.d = d;
  p.a = std::sqrt(3.0 * d) / 15.0;
  p.b = 3.0;
  return p;
}

void BoundParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ParameterError("bound params: a and b must be positive");
  }
  if (d < 1) throw ParameterError("bound params: d must be >= 1");
}

double logistic_bound(const BoundParams& params, double tau) {
  params.validate();
  return params.a * (1.0 / (1.0 + std::exp(-params.b * tau)) - 0.5);
}

double shell_variance(const BoundParams& params, double s, double t) {
  const double r = shell_radius(params, s, t);
  return r * r / params.d;
}

double shell_radius(const BoundParams& params, double s, double t) {
  params.validate();
  if (!(s < t)) throw DomainError("shell_radius: need s < t");
  const double b = params.b;
  const double boundary = 1.0 / (1.0 + std::exp(b * t)) - 1.0 / (1.0 + std::exp(b * s));
  const double inner = boundary + 0.25 * b * (t - s);
  return params.a / std::sqrt(b) * std::sqrt(std::max(0.0, inner));
}

ShellReport mc_shell_check(const BoundParams& params, double s, double t, int trials, std::uint64_t seed,
                           int substeps, unsigned threads) {
  params.validate();
  if (!(s < t)) throw DomainError("mc_shell_check: need s < t");
  if (trials < 2) throw ParameterError("mc_shell_check: need at least 2 trials");
  if (substeps < 1) throw ParameterError("mc_shell_check: substeps must be positive");
  const double dt = (t - s) / substeps;
  const double sqrt_dt = std::sqrt(dt);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.d));
  std::vector<double> diffusion(static_cast<std::size_t>(substeps));
  for (int i = 0; i < substeps; ++i) {
    // left point in the direction of integration (t downwards)
    diffusion[static_cast<std::size_t>(i)] = logistic_bound(params, t - i * dt) * inv_sqrt_d * sqrt_dt;
  }
  const CounterRng root(seed, 0x5E11ull);
  std::vector<double> norms(static_cast<std::size_t>(trials));
  parallel_for(
      norms.size(),
      [&](std::size_t path) {
        CounterRng rng = root.derive(path);
        Vector z = Vector::Zero(params.d);
        for (double g : diffusion) {
          for (int j = 0; j < params.d; ++j) z[j] += g * rng.normal();
        }
        norms[path] = z.norm();
      },
      threads);
  double mean = 0.0;
  for (double v : norms) mean += v;
  mean /= trials;
  double var = 0.0;
  for (double v : norms) var += (v - mean) * (v - mean);
  var /= (trials - 1);
  ShellReport report;
  report.radius = shell_radius(params, s, t);
  report.mean_norm = mean;
  report.rel_std = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  report.trials = trials;
  report.substeps = substeps;
  return report;
}

BoundReport bound_report(const GaussianMixture& model, const TimeSchedule& schedule, const PredictorParams& params,
                         const BoundParams& bound, const std::vector<Vector>& x_T, int oracle_substeps) {
  bound.validate();
  const std::size_t last = schedule.size() - 1;
  std::vector<Trajectory> oracles(x_T.size());
  parallel_for(x_T.size(), [&](std::size_t i) { oracles[i] = oracle_solve(model, x_T[i], schedule, oracle_substeps); });

  BoundReport report;
  int total = 0;
  int violations = 0;
  for (std::size_t n = last; n >= 1; --n) {
    BoundStep row;
    row.step = static_cast<int>(n);
    row.t = schedule[n];
    row.s = schedule[n - 1];
    row.bound = logistic_bound(bound, row.s) + logistic_bound(bound, row.t) + shell_radius(bound, row.s, row.t);
    for (const auto& oracle : oracles) {
      const Vector& start = oracle.nodes[last - n].x;
      const Vector& truth = oracle.nodes[last - n + 1].x;
      const double actual = (amed_step(model, params, start, row.t, row.s).x - truth).norm();
      row.mean_actual += actual;
      row.max_actual = std::max(row.max_actual, actual);
      if (actual > row.bound) ++row.violations;
      ++row.count;
    }
    if (row.count > 0) row.mean_actual /= row.count;
    row.ratio = row.bound > 0.0 ? row.mean_actual / row.bound : 0.0;
    total += row.count;
    violations += row.violations;
    report.steps.push_back(row);
  }
  report.violation_rate = total > 0 ? static_cast<double>(violations) / total : 0.0;
  return report;
}

}  // namespace amedlab
