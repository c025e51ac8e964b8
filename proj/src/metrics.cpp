#include "amedlab/metrics.hpp"

#include "amedlab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace amedlab {

double sliced_wasserstein(const std::vector<Vector>& a, const std::vector<Vector>& b, int projections,
                          std::uint64_t seed) {
  if (a.size() != b.size()) throw ContractError("sliced_wasserstein: sample sets must have equal size");
  if (projections < 1) throw ParameterError("sliced_wasserstein: need at least one projection");
  if (a.empty()) return 0.0;
  const Eigen::Index d = a.front().size();
  CounterRng rng(seed, 0x5317ull);
  std::vector<double> pa(a.size());
  std::vector<double> pb(b.size());
  double total = 0.0;
  for (int p = 0; p < projections; ++p) {
    Vector dir(d);
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index j = 0; j < d; ++j) dir[j] = rng.normal();
      norm = dir.norm();
    }
    dir /= norm;
    for (std::size_t i = 0; i < a.size(); ++i) {
      pa[i] = dir.dot(a[i]);
      pb[i] = dir.dot(b[i]);
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double sq = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) sq += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    total += std::sqrt(sq / static_cast<double>(pa.size()));
  }
  return total / projections;
}

double order_estimate(const std::vector<std::pair<double, double>>& steps_and_errors) {
  if (steps_and_errors.size() < 3) throw ContractError("order_estimate: need at least 3 points");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [steps, err] : steps_and_errors) {
    if (!(steps > 0.0) || !(err > 0.0)) throw DomainError("order_estimate: steps and errors must be positive");
    mx += std::log(steps);
    my += std::log(err);
  }
  const double n = static_cast<double>(steps_and_errors.size());
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [steps, err] : steps_and_errors) {
    const double dx = std::log(steps) - mx;
    sxy += dx * (std::log(err) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw DomainError("order_estimate: step counts must differ");
  return -sxy / sxx;
}

double mean_endpoint_error(const std::vector<Vector>& endpoints, const std::vector<Vector>& reference) {
  if (endpoints.size() != reference.size()) throw ContractError("mean_endpoint_error: size mismatch");
  if (endpoints.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < endpoints.size(); ++i) total += (endpoints[i] - reference[i]).norm();
  return total / static_cast<double>(endpoints.size());
}

}  // namespace amedlab
