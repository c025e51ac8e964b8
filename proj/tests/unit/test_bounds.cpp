#include <doctest.h>

#include "amedlab/bounds.hpp"
#include "amedlab/experiment.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace amedlab;
using amedlab::testing::adaptive_simpson;

namespace {

BoundParams params_ab(double a, double b, int d = 1) {
  BoundParams p;
  p.a = a;
  p.b = b;
  p.d = d;
  return p;
}

}  // namespace

TEST_CASE("logistic bound") {
  auto p = BoundParams::defaults(12288);
  CHECK(p.a == doctest::Approx(12.8).epsilon(1e-14));
  CHECK(p.b == 3.0);
  CHECK(logistic_bound(p, 0.0) == 0.0);
  CHECK(std::abs(logistic_bound(p, 80.0) - 6.4) <= 1e-6);
  CHECK(std::abs(logistic_bound(params_ab(2.0, 1.0), 50.0) - 1.0) <= 1e-12);
  double prev = 0.0;
  for (double tau = 0.1; tau < 5.0; tau += 0.1) {
    const double f = logistic_bound(p, tau);
    CHECK(f > prev);
    prev = f;
  }
  CHECK_THROWS_AS(logistic_bound(params_ab(0.0, 1.0), 1.0), ParameterError);
  CHECK_THROWS_AS(logistic_bound(params_ab(1.0, -1.0), 1.0), ParameterError);
}

TEST_CASE("shell radius") {
  auto p = BoundParams::defaults(64);
  CHECK(shell_radius(p, 2.0, 2.0 + 1e-12) < 1e-6);

  // deep in the saturated regime the boundary term vanishes
  const double asym = 0.5 * p.a * std::sqrt(10.0);
  CHECK(std::abs(shell_radius(p, 10.0, 20.0) - asym) <= 1e-9 * asym);

  double prev = 0.0;
  for (double t = 1.1; t < 8.0; t += 0.3) {
    const double r = shell_radius(p, 1.0, t);
    CHECK(r > prev);
    prev = r;
  }

  // r^2 is the integral of f^2 over [s, t]
  for (auto [s, t] : {std::pair{0.01, 0.5}, std::pair{0.2, 3.0}, std::pair{1.0, 10.0}, std::pair{0.002, 80.0}}) {
    auto f2 = [&](double tau) {
      const double f = logistic_bound(p, tau);
      return f * f;
    };
    const double integral = adaptive_simpson(f2, s, t, 1e-14);
    const double r = shell_radius(p, s, t);
    CHECK(std::abs(r * r - integral) <= 1e-9 * integral);
    CHECK(shell_variance(p, s, t) == doctest::Approx(r * r / 64.0).epsilon(1e-15));
  }

  CHECK_THROWS_AS(shell_radius(p, 2.0, 2.0), DomainError);
  CHECK_THROWS_AS(shell_radius(p, 3.0, 2.0), DomainError);
}

TEST_CASE("Monte Carlo shell concentration") {
  const auto p = BoundParams::defaults(256);
  auto rep = mc_shell_check(p, 1.0, 10.0, 512, 7, 200, 1);
  MESSAGE("radius " << rep.radius << " mean " << rep.mean_norm << " rel_std " << rep.rel_std);
  CHECK(std::abs(rep.mean_norm / rep.radius - 1.0) <= 0.05);
  CHECK(rep.rel_std <= 0.10);
  CHECK(rep.trials == 512);
  CHECK(rep.substeps == 200);

  auto coarse = mc_shell_check(p, 1.0, 10.0, 512, 7, 100, 1);
  CHECK(std::abs(coarse.mean_norm / rep.mean_norm - 1.0) < 0.01);

  auto tiny = params_ab(1e-12, 3.0, 256);
  CHECK(mc_shell_check(tiny, 1.0, 10.0, 64, 1, 200, 1).mean_norm < 1e-10);

  // thread count does not matter
  auto threaded = mc_shell_check(p, 1.0, 10.0, 64, 9, 50, 3);
  auto serial = mc_shell_check(p, 1.0, 10.0, 64, 9, 50, 1);
  CHECK(threaded.mean_norm == serial.mean_norm);

  CHECK_THROWS_AS(mc_shell_check(p, 2.0, 1.0, 64, 1), DomainError);
  CHECK_THROWS_AS(mc_shell_check(p, 1.0, 2.0, 1, 1), ParameterError);
}

TEST_CASE("bound report") {
  auto model = amedlab::testing::k1_model(4, 1.0);
  auto sched = make_schedule({}, 6, 0.002, 80.0);
  auto zero = PredictorParams::zeros(PredictorConfig{});
  std::vector<Vector> x_T;
  for (std::size_t i = 0; i < 8; ++i) x_T.push_back(initial_noise(4, i, 4, 80.0));

  auto huge = bound_report(model, sched, zero, params_ab(1e6, 3.0, 4), x_T, 64);
  CHECK(huge.violation_rate == 0.0);
  REQUIRE(huge.steps.size() == 5);
  double max_dev = 0.0;
  for (const auto& row : huge.steps) {
    CHECK(row.count == 8);
    CHECK(row.s < row.t);
    CHECK(row.bound > 0.0);
    CHECK(row.ratio == doctest::Approx(row.mean_actual / row.bound));
    CHECK(row.max_actual >= row.mean_actual);
    max_dev = std::max(max_dev, row.max_actual);
  }
  CHECK(huge.steps.front().step == 5);
  CHECK(huge.steps.front().t == 80.0);

  auto generous = bound_report(model, sched, zero, params_ab(2.0 * max_dev, 3.0, 4), x_T, 64);
  CHECK(generous.violation_rate == 0.0);
}
