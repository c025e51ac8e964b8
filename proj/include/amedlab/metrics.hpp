#pragma once

#include "amedlab/common.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace amedlab {

/// Mean over random unit directions of the 1D 2-Wasserstein distance between
/// the projected sample sets (sorted pairing). Both sets must have equal size.
double sliced_wasserstein(const std::vector<Vector>& a, const std::vector<Vector>& b, int projections,
                          std::uint64_t seed);

/// Negated least-squares slope of log(error) against log(step count).
double order_estimate(const std::vector<std::pair<double, double>>& steps_and_errors);

double mean_endpoint_error(const std::vector<Vector>& endpoints, const std::vector<Vector>& reference);

}  // namespace amedlab
