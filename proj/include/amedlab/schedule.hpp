#pragma once

#include "amedlab/common.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amedlab {

enum class ScheduleKind { polynomial, log_snr, uniform };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::polynomial;
  double rho = 7.0;  ///< only used by the polynomial kind

  /// Parses "polynomial[:rho]", "logsnr" or "uniform".
  static ScheduleSpec parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;
};

/// Strictly increasing time grid t_1 = t_min < ... < t_N = t_max.
class TimeSchedule {
 public:
  TimeSchedule(std::vector<double> times, ScheduleSpec spec);

  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return times_[i]; }
  [[nodiscard]] double t_min() const noexcept { return times_.front(); }
  [[nodiscard]] double t_max() const noexcept { return times_.back(); }
  [[nodiscard]] std::span<const double> times() const noexcept { return times_; }
  [[nodiscard]] const ScheduleSpec& spec() const noexcept { return spec_; }

 private:
  std::vector<double> times_;
  ScheduleSpec spec_;
};

TimeSchedule make_schedule(const ScheduleSpec& spec, int num_nodes, double t_min, double t_max);

/// Inserts `m` intermediate nodes into every interval using the schedule's own
/// interpolation rule. Original nodes are copied, so they survive bit-exactly
/// at indices k * (m + 1).
TimeSchedule refine_teacher(const TimeSchedule& schedule, int m);

/// t_lo^r * t_hi^(1 - r); r = 0.5 is the geometric mean, r = 1 collapses to t_lo.
double geometric_intermediate(double t_lo, double t_hi, double r);

}  // namespace amedlab
