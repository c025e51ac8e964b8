#include <doctest.h>

#include "amedlab/experiment.hpp"
#include "amedlab/geometry.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace amedlab;
using amedlab::testing::k1_model;
using amedlab::testing::random_mixture;

namespace {

Trajectory from_states(const std::vector<Vector>& xs) {
  Trajectory traj;
  double t = static_cast<double>(xs.size());
  for (const auto& x : xs) traj.nodes.push_back({t--, x});
  return traj;
}

Trajectory k1_trajectory(int d, int nodes) {
  auto model = k1_model(d, 0.8);
  const Vector x_T = initial_noise(3, 0, d, 80.0);
  auto sched = make_schedule({}, nodes, 0.002, 80.0);
  std::vector<Vector> xs;
  for (std::size_t i = sched.size(); i-- > 0;) xs.push_back(exact_trajectory(model, x_T, sched[i], 80.0));
  return from_states(xs);
}

double total_variance(const Matrix& states) {
  const Vector mean = states.colwise().mean().transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < states.rows(); ++i) total += (states.row(i).transpose() - mean).squaredNorm();
  return total / static_cast<double>(states.rows());
}

}  // namespace

TEST_CASE("single-component trajectories are rank one") {
  auto traj = k1_trajectory(6, 12);
  auto pca = pca_trajectory(traj);
  CHECK(pca.eigenvalues[1] / pca.eigenvalues[0] < 1e-12);
  for (auto e : projection_error(traj, 2)) CHECK(*e <= 1e-10);
  auto cum = cumulative_variance(traj);
  for (Eigen::Index k = 0; k < cum.size(); ++k) CHECK(cum[k] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("planted plane") {
  const int d = 7;
  CounterRng rng(21);
  Vector m(d), u(d), v(d);
  for (int i = 0; i < d; ++i) {
    m[i] = rng.normal();
    u[i] = rng.normal();
    v[i] = rng.normal();
  }
  std::vector<Vector> xs;
  for (int j = 0; j < 15; ++j) xs.push_back(m + rng.normal() * u + rng.normal() * v);
  auto traj = from_states(xs);
  for (auto e : projection_error(traj, 2)) CHECK(*e <= 1e-10);
  auto pca = pca_trajectory(traj);
  CHECK(pca.eigenvalues[2] <= 1e-12 * pca.eigenvalues[0]);
}

TEST_CASE("pca structure on mixture trajectories") {
  auto model = random_mixture(3, 8, 4);
  auto sched = make_schedule({}, 10, 0.002, 80.0);
  for (int i = 0; i < 5; ++i) {
    auto traj = oracle_solve(model, initial_noise(8, static_cast<std::size_t>(i), 8, 80.0), sched, 32);
    auto pca = pca_trajectory(traj);
    const Matrix gram = pca.components.transpose() * pca.components;
    CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index k = 1; k < 8; ++k) CHECK(pca.eigenvalues[k] <= pca.eigenvalues[k - 1]);
    CHECK(pca.eigenvalues.minCoeff() >= 0.0);
    const double total = total_variance(traj.state_matrix());
    CHECK(std::abs(pca.eigenvalues.sum() - total) <= 1e-10 * total);

    // sign convention: first non-negligible coordinate positive
    for (Eigen::Index j = 0; j < 8; ++j) {
      for (Eigen::Index r = 0; r < 8; ++r) {
        if (std::abs(pca.components(r, j)) > 1e-12) {
          CHECK(pca.components(r, j) > 0.0);
          break;
        }
      }
    }

    auto full = projection_error(traj, 8);
    for (auto e : full) CHECK(*e <= 1e-12);
    std::vector<std::optional<double>> prev = projection_error(traj, 1);
    for (int k = 2; k <= 8; ++k) {
      auto cur = projection_error(traj, k);
      for (std::size_t n = 0; n < cur.size(); ++n) CHECK(*cur[n] <= *prev[n] + 1e-12);
      prev = cur;
    }
    auto cum = cumulative_variance(traj);
    CHECK(cum[7] == 1.0);
    for (Eigen::Index k = 1; k < 8; ++k) CHECK(cum[k] >= cum[k - 1]);
  }
}

TEST_CASE("isotropic cloud spreads its variance evenly") {
  const int d = 4;
  CounterRng rng(5);
  std::vector<Vector> xs;
  for (int j = 0; j < 20000; ++j) {
    Vector x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.normal();
    xs.push_back(x);
  }
  auto cum = cumulative_variance(from_states(xs));
  for (int k = 1; k <= d; ++k) CHECK(std::abs(cum[k - 1] - k / static_cast<double>(d)) < 0.03);
}

TEST_CASE("degenerate and invalid inputs") {
  std::vector<Vector> same(4, Vector::Constant(3, 2.0));
  auto traj = from_states(same);
  auto pca = pca_trajectory(traj);
  CHECK(pca.eigenvalues.norm() == 0.0);
  auto cum = cumulative_variance(traj);
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(cum[k] == 1.0);

  std::vector<Vector> with_zero{Vector::Zero(3), Vector::Ones(3), 2.0 * Vector::Ones(3)};
  auto errs = projection_error(from_states(with_zero), 1);
  CHECK_FALSE(errs[0].has_value());
  CHECK(errs[1].has_value());

  CHECK_THROWS_AS(pca_trajectory(from_states({Vector::Zero(3), Vector::Ones(3)})), ContractError);
  CHECK_THROWS_AS(projection_error(traj, 0), ParameterError);
  CHECK_THROWS_AS(projection_error(traj, 4), ParameterError);
}

TEST_CASE("grid alignment") {
  auto model = random_mixture(2, 4, 6);
  auto sched = make_schedule({}, 6, 0.002, 80.0);
  const SolverKind dpm2{SolverTag::dpm2};
  const auto grid = parse_grid("0.1:1.0:0.1");

  SUBCASE("a singleton grid at 0.5 gives the zero table") {
    const double half[] = {0.5};
    auto oracle = oracle_solve(model, initial_noise(1, 0, 4, 80.0), sched, 64);
    for (auto base : {dpm2, SolverKind{SolverTag::euler}, SolverKind{SolverTag::ipndm}}) {
      auto rows = grid_align(model, base, sched, half, oracle);
      REQUIRE(rows.size() == 5);
      for (const auto& row : rows) {
        CHECK(row.alignment == 0.0);
        CHECK(row.best_r == 0.5);
      }
      CHECK(rows.front().step == 5);
      CHECK(rows.back().step == 1);
      CHECK(rows.back().t == sched[0]);
    }
  }

  SUBCASE("dpm2 alignment is positive on average") {
    double mean = 0.0;
    int count = 0;
    for (int i = 0; i < 16; ++i) {
      auto oracle = oracle_solve(model, initial_noise(2, static_cast<std::size_t>(i), 4, 80.0), sched, 64);
      auto rows = grid_align(model, dpm2, sched, grid, oracle);
      CHECK(rows.front().alignment >= 0.0);
      for (const auto& row : rows) {
        mean += row.alignment;
        ++count;
      }
    }
    mean /= count;
    MESSAGE("mean alignment " << mean);
    CHECK(mean > 0.0);
  }

  SUBCASE("invalid grids") {
    auto oracle = oracle_solve(model, initial_noise(1, 0, 4, 80.0), sched, 32);
    const double bad[] = {0.0, 0.5};
    CHECK_THROWS_AS(grid_align(model, dpm2, sched, bad, oracle), ParameterError);
    const double above[] = {1.2};
    CHECK_THROWS_AS(grid_align(model, dpm2, sched, above, oracle), ParameterError);
    CHECK_THROWS_AS(grid_align(model, dpm2, sched, std::span<const double>(), oracle), ParameterError);
  }
}

TEST_CASE("parse_grid") {
  auto g = parse_grid("0.1:1.0:0.1");
  REQUIRE(g.size() == 10);
  CHECK(g.front() == doctest::Approx(0.1));
  CHECK(g.back() == doctest::Approx(1.0));
  auto list = parse_grid("0.2,0.5,0.9");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == 0.5);
  CHECK_THROWS_AS(parse_grid("a:b:c"), ParameterError);
  CHECK_THROWS_AS(parse_grid("0.1:1.0:0"), ParameterError);
  CHECK_THROWS_AS(parse_grid("1.0:0.1:0.1"), ParameterError);
}
