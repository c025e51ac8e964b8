#include <doctest.h>

#include "amedlab/experiment.hpp"
#include "amedlab/metrics.hpp"
#include "amedlab/rng.hpp"
#include "amedlab/solvers.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace amedlab;
using amedlab::testing::bitwise_equal;
using amedlab::testing::k1_model;
using amedlab::testing::random_mixture;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector noise(std::uint64_t seed, int d, double scale) {
  CounterRng rng(seed, 3);
  Vector x(d);
  for (int i = 0; i < d; ++i) x[i] = scale * rng.normal();
  return x;
}

double endpoint_error(const GaussianMixture& m, const SolverKind& kind, const TimeSchedule& sched, int trajectories) {
  double total = 0.0;
  for (int i = 0; i < trajectories; ++i) {
    Vector xT = initial_noise(5, static_cast<std::size_t>(i), m.dim(), sched.t_max());
    total += (sample(m, kind, sched, xT).endpoint() - exact_trajectory(m, xT, sched.t_min(), sched.t_max())).norm();
  }
  return total / trajectories;
}

double order_on(const GaussianMixture& m, const SolverKind& kind, const ScheduleSpec& spec, double lo, double hi) {
  std::vector<std::pair<double, double>> curve;
  for (int nfe : {8, 16, 32, 64}) {
    int N = nfe / kind.evals_per_step() + 1;
    curve.emplace_back(nfe, endpoint_error(m, kind, make_schedule(spec, N, lo, hi), 16));
  }
  return order_estimate(curve);
}

}  // namespace

TEST_CASE("euler step on the single gaussian") {
  auto m = GaussianMixture::single(Vector::Zero(2), 1.0);
  auto res = step_euler(m, vec({2, 0}), 1.0, 0.5);
  CHECK(res.x[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(res.x[1] == 0.0);
  CHECK(res.evals.size() == 1);
  CHECK(res.evals[0].t == 1.0);
}

TEST_CASE("every step is stationary at a symmetric point") {
  GaussianMixture pair({0.5, 0.5}, {vec({1, 0}), vec({-1, 0})}, {1.0, 1.0});
  Vector x = Vector::Zero(2);
  CHECK(step_euler(pair, x, 3.0, 1.0).x.norm() < 1e-15);
  CHECK(step_heun(pair, x, 3.0, 1.0).x.norm() < 1e-15);
  CHECK(step_dpm2(pair, x, 3.0, 1.0, 0.3).x.norm() < 1e-15);
  std::vector<Vector> hist{Vector::Zero(2), Vector::Zero(2)};
  CHECK(step_ipndm(pair, x, 3.0, 1.0, hist).x.norm() < 1e-15);
}

TEST_CASE("heun equals dpm2 with r = 1 bitwise") {
  auto m = random_mixture(2, 8, 3);
  for (int i = 0; i < 10; ++i) {
    Vector x = noise(100 + i, 8, 5.0);
    double t_hi = 0.5 + i, t_lo = 0.3 + 0.5 * i;
    auto h = step_heun(m, x, t_hi, t_lo);
    auto d = step_dpm2(m, x, t_hi, t_lo, 1.0);
    CHECK(bitwise_equal(h.x, d.x));
    CHECK(h.evals.size() == 2);
  }
}

TEST_CASE("ipndm with empty history equals euler bitwise") {
  auto m = random_mixture(3, 4, 8);
  for (int i = 0; i < 10; ++i) {
    Vector x = noise(200 + i, 4, 3.0);
    auto e = step_euler(m, x, 2.0 + i, 1.0 + i);
    auto p = step_ipndm(m, x, 2.0 + i, 1.0 + i, {});
    CHECK(bitwise_equal(e.x, p.x));
  }
}

TEST_CASE("dpm2 with r = 0.5 uses the slope at the geometric midpoint only") {
  auto m = random_mixture(2, 3, 4);
  Vector x = noise(7, 3, 2.0);
  double t_hi = 4.0, t_lo = 1.0, s = 2.0;
  Vector e0 = eval_model(m, x, t_hi).epsilon;
  Vector xs = x + (s - t_hi) * e0;
  Vector expect = x + (t_lo - t_hi) * eval_model(m, xs, s).epsilon;
  auto res = step_dpm2(m, x, t_hi, t_lo, 0.5);
  CHECK((res.x - expect).norm() <= 1e-13 * expect.norm());
  REQUIRE(res.evals.size() == 2);
  CHECK(res.evals[1].t == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("dpm2 weights follow 1/(2r)") {
  auto m = random_mixture(2, 3, 6);
  Vector x = noise(9, 3, 2.0);
  double t_hi = 3.0, t_lo = 0.7, r = 0.3;
  double s = std::pow(t_lo, r) * std::pow(t_hi, 1.0 - r);
  Vector e0 = eval_model(m, x, t_hi).epsilon;
  Vector es = eval_model(m, x + (s - t_hi) * e0, s).epsilon;
  double w = 1.0 / (2.0 * r);
  Vector expect = x + (t_lo - t_hi) * (w * es + (1.0 - w) * e0);
  CHECK((step_dpm2(m, x, t_hi, t_lo, r).x - expect).norm() <= 1e-13 * expect.norm());
  CHECK_THROWS_AS(step_dpm2(m, x, t_hi, t_lo, 0.0), ParameterError);
  CHECK_THROWS_AS(step_dpm2(m, x, t_hi, t_lo, 1.01), ParameterError);
}

TEST_CASE("ipndm coefficients") {
  auto c4 = detail::ipndm_coefficients(4);
  CHECK(c4[0] == doctest::Approx(55.0 / 24.0));
  CHECK(c4[1] == doctest::Approx(-59.0 / 24.0));
  CHECK(c4[2] == doctest::Approx(37.0 / 24.0));
  CHECK(c4[3] == doctest::Approx(-9.0 / 24.0));
  auto c3 = detail::ipndm_coefficients(3);
  CHECK(c3[1] == doctest::Approx(-16.0 / 12.0));
  auto c2 = detail::ipndm_coefficients(2);
  CHECK(c2[0] == 1.5);
  CHECK(c2[1] == -0.5);
  for (int order = 1; order <= 4; ++order) {
    double sum = 0.0;
    for (double c : detail::ipndm_coefficients(order)) sum += c;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("ipndm combines history newest first") {
  auto m = random_mixture(2, 2, 11);
  Vector x = noise(3, 2, 1.0);
  std::vector<Vector> hist{vec({0.1, 0.2}), vec({-0.3, 0.4}), vec({0.5, -0.6})};
  Vector e0 = eval_model(m, x, 2.0).epsilon;
  Vector expect = x + (1.5 - 2.0) * (55.0 * e0 - 59.0 * hist[0] + 37.0 * hist[1] - 9.0 * hist[2]) / 24.0;
  CHECK((step_ipndm(m, x, 2.0, 1.5, hist).x - expect).norm() < 1e-14);
  // order cap
  Vector expect2 = x + (1.5 - 2.0) * (1.5 * e0 - 0.5 * hist[0]);
  CHECK((step_ipndm(m, x, 2.0, 1.5, hist, 2).x - expect2).norm() < 1e-14);
  // equal slopes reduce every order to euler
  std::vector<Vector> same{e0, e0, e0};
  CHECK((step_ipndm(m, x, 2.0, 1.5, same).x - step_euler(m, x, 2.0, 1.5).x).norm() < 1e-14);
  std::vector<Vector> too_long{e0, e0, e0, e0};
  CHECK_THROWS_AS(step_ipndm(m, x, 2.0, 1.5, too_long), ContractError);
}

TEST_CASE("dpmpp_2m first step is the exponential integrator") {
  auto m = random_mixture(2, 3, 12);
  Vector x = noise(4, 3, 3.0);
  double t_hi = 3.0, t_lo = 1.2;
  Vector D = eval_model(m, x, t_hi).denoised;
  // with lambda = -log t, h = log(t_hi / t_lo)
  double h = std::log(t_hi / t_lo);
  Vector expect = (t_lo / t_hi) * x - (std::exp(-h) - 1.0) * D;
  auto res = step_dpmpp_2m(m, x, t_hi, t_lo, std::nullopt);
  CHECK((res.x - expect).norm() <= 1e-13 * expect.norm());

  // an identical previous denoised value cancels the correction
  DenoisedRecord prev{5.0, D};
  CHECK((step_dpmpp_2m(m, x, t_hi, t_lo, prev).x - res.x).norm() <= 1e-13 * expect.norm());

  // second order form
  Vector Dp = D + vec({0.3, -0.2, 0.1});
  double r0 = std::log(5.0 / t_hi) / h;
  Vector expect2 = (t_lo / t_hi) * x - (std::exp(-h) - 1.0) * ((1.0 + 0.5 / r0) * D - (0.5 / r0) * Dp);
  CHECK((step_dpmpp_2m(m, x, t_hi, t_lo, DenoisedRecord{5.0, Dp}).x - expect2).norm() <= 1e-13 * expect2.norm());
  CHECK_THROWS_AS(step_dpmpp_2m(m, x, t_hi, t_lo, DenoisedRecord{2.0, Dp}), ContractError);
}

TEST_CASE("dpmpp_2m is exact when the denoiser is constant") {
  // a vanishing std makes D equal to the mean everywhere
  auto m = GaussianMixture::single(vec({1.0, -2.0}), 1e-9);
  Vector xT = vec({40.0, 25.0});
  auto sched = make_schedule({}, 5, 0.01, 80.0);
  auto traj = sample(m, SolverKind::parse("dpmpp_2m"), sched, xT);
  Vector exact = exact_trajectory(m, xT, 0.01, 80.0);
  CHECK((traj.endpoint() - exact).norm() < 1e-10);
}

TEST_CASE("steps reject reversed or empty intervals") {
  auto m = k1_model(2);
  CHECK_THROWS_AS(step_euler(m, Vector::Ones(2), 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(step_heun(m, Vector::Ones(2), 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(step_euler(m, Vector::Ones(2), 1.0, 0.0), DomainError);
}

TEST_CASE("afs direction") {
  CHECK(afs_direction(Vector::Zero(3), 80.0).norm() == 0.0);
  auto m = GaussianMixture::single(Vector::Zero(3), 1e-7);
  Vector x = vec({10.0, -30.0, 7.0});
  Vector eps = eval_model(m, x, 80.0).epsilon;
  CHECK((afs_direction(x, 80.0) - eps).norm() < 1e-14 * eps.norm() + 1e-15);
  CHECK_THROWS_AS(afs_direction(x, 0.0), DomainError);
}

TEST_CASE("nfe accounting for every kind") {
  auto m = random_mixture(2, 3, 1);
  Vector xT = initial_noise(1, 0, 3, 80.0);
  for (const char* name : {"euler", "heun", "dpm2", "dpm2:0.3", "ipndm", "ipndm:2", "dpmpp_2m"}) {
    for (bool afs : {false, true}) {
      for (int N = 3; N <= 7; ++N) {
        auto kind = SolverKind::parse(name);
        kind.afs = afs;
        auto traj = sample(m, kind, make_schedule({}, N, 0.002, 80.0), xT);
        int expect = kind.evals_per_step() * (N - 1) - (afs ? 1 : 0);
        CHECK(traj.nfe == expect);
        CHECK(expected_nfe(kind, N) == expect);
        CHECK(static_cast<int>(traj.evals.size()) == traj.nfe);
        REQUIRE(traj.nodes.size() == static_cast<std::size_t>(N));
        CHECK(traj.nodes.front().t == 80.0);
        CHECK(traj.nodes.back().t == 0.002);
        CHECK(bitwise_equal(traj.nodes.front().x, xT));
      }
    }
  }
}

TEST_CASE("afs replaces only the first evaluation") {
  auto m = random_mixture(2, 3, 2);
  Vector xT = initial_noise(4, 1, 3, 80.0);
  auto sched = make_schedule({}, 5, 0.002, 80.0);
  auto kind = SolverKind::parse("euler");
  kind.afs = true;
  auto traj = sample(m, kind, sched, xT);
  Vector first = xT + (sched[3] - 80.0) * afs_direction(xT, 80.0);
  CHECK((traj.nodes[1].x - first).norm() <= 1e-14 * first.norm());
  CHECK(traj.evals.front().t == sched[3]);
}

TEST_CASE("multistep solvers beat euler at equal budget on the single gaussian") {
  auto m = k1_model(4, 1.0);
  auto sched = make_schedule({}, 9, 0.002, 80.0);
  double euler = endpoint_error(m, SolverKind::parse("euler"), sched, 16);
  CHECK(endpoint_error(m, SolverKind::parse("ipndm"), sched, 16) < euler);
  CHECK(endpoint_error(m, SolverKind::parse("dpmpp_2m"), sched, 16) < euler);
}

TEST_CASE("empirical orders on the diffusion schedule") {
  auto m = k1_model(4, 1.0);
  double euler = order_on(m, SolverKind::parse("euler"), {}, 0.002, 80.0);
  double heun = order_on(m, SolverKind::parse("heun"), {}, 0.002, 80.0);
  double dpm2 = order_on(m, SolverKind::parse("dpm2"), {}, 0.002, 80.0);
  MESSAGE("euler " << euler << ", heun " << heun << ", dpm2 " << dpm2);
  CHECK(std::abs(euler - 1.0) <= 0.3);
  CHECK(heun >= 1.7);
  CHECK(heun <= 2.3);
  CHECK(dpm2 >= 1.7);
  CHECK(dpm2 <= 2.3);
}

TEST_CASE("distance to the mean shrinks along the exact single-gaussian flow") {
  auto m = k1_model(3, 0.5);
  Vector xT = noise(31, 3, 80.0);
  auto sched = make_schedule({}, 12, 0.002, 80.0);
  double prev = INFINITY;
  for (std::size_t i = sched.size(); i-- > 0;) {
    double d = (exact_trajectory(m, xT, sched[i], 80.0) - m.means()[0]).norm();
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("solver kind parsing") {
  CHECK(SolverKind::parse("ddim").tag == SolverTag::euler);
  CHECK(SolverKind::parse("edm").tag == SolverTag::heun);
  CHECK(SolverKind::parse("dpm2:0.25").r == 0.25);
  CHECK(SolverKind::parse("ipndm:3").order == 3);
  CHECK(SolverKind::parse("dpmpp").tag == SolverTag::dpmpp_2m);
  CHECK(SolverKind::parse(SolverKind::parse("dpm2:0.25").name()).r == 0.25);
  CHECK_THROWS_AS(SolverKind::parse("rk45"), ParameterError);
  CHECK_THROWS_AS(SolverKind::parse("dpm2:0"), ParameterError);
  CHECK_THROWS_AS(SolverKind::parse("ipndm:5"), ParameterError);
}

TEST_CASE("step plan validation") {
  StepPlan ok{{2.0}, {1.0}, {1.0}};
  CHECK_NOTHROW(ok.validate(1.0, 4.0));
  StepPlan outside{{4.0}, {1.0}, {1.0}};
  CHECK_THROWS_AS(outside.validate(1.0, 4.0), ParameterError);
  StepPlan bad_scale{{2.0}, {0.0}, {1.0}};
  CHECK_THROWS_AS(bad_scale.validate(1.0, 4.0), ParameterError);
}
