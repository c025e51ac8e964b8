#include "amedlab/schedule.hpp"

#include "amedlab/common.hpp"

#include <cmath>
#include <sstream>

namespace amedlab {

namespace {

void check_rho(const ScheduleSpec& spec) {
  if (spec.kind == ScheduleKind::polynomial && !(spec.rho > 0.0 && std::isfinite(spec.rho))) {
    throw ParameterError("polynomial schedule needs rho > 0");
  }
}

// Maps a fraction u in [0, 1] of the way from `lo` to `hi` according to the kind.
double interpolate(const ScheduleSpec& spec, double lo, double hi, double u) {
  switch (spec.kind) {
    case ScheduleKind::polynomial: {
      const double inv = 1.0 / spec.rho;
      const double a = std::pow(lo, inv);
      const double b = std::pow(hi, inv);
      return std::pow(a + u * (b - a), spec.rho);
    }
    case ScheduleKind::log_snr:
      return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
    case ScheduleKind::uniform:
      return lo + u * (hi - lo);
  }
  return lo;
}

}  // namespace

ScheduleSpec ScheduleSpec::parse(std::string_view text) {
  ScheduleSpec spec;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  if (name == "polynomial" || name == "poly") {
    spec.kind = ScheduleKind::polynomial;
    if (colon != std::string_view::npos) {
      try {
        spec.rho = std::stod(std::string(text.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ParameterError("bad rho in schedule '" + std::string(text) + "'");
      }
    }
  } else if (name == "logsnr" || name == "log_snr") {
    spec.kind = ScheduleKind::log_snr;
  } else if (name == "uniform") {
    spec.kind = ScheduleKind::uniform;
  } else {
    throw ParameterError("unknown schedule kind '" + std::string(name) + "'");
  }
  check_rho(spec);
  return spec;
}

std::string ScheduleSpec::to_string() const {
  switch (kind) {
    case ScheduleKind::polynomial: {
      std::ostringstream out;
      out << "polynomial:" << rho;
      return out.str();
    }
    case ScheduleKind::log_snr:
      return "logsnr";
    case ScheduleKind::uniform:
      return "uniform";
  }
  return "?";
}

TimeSchedule::TimeSchedule(std::vector<double> times, ScheduleSpec spec)
    : times_(std::move(times)), spec_(spec) {
  if (times_.size() < 2) throw ParameterError("a schedule needs at least 2 nodes");
  if (!(times_.front() > 0.0)) throw DomainError("schedule must start at t_1 > 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1]) || !std::isfinite(times_[i])) {
      throw ParameterError("schedule must be strictly increasing and finite");
    }
  }
}

TimeSchedule make_schedule(const ScheduleSpec& spec, int num_nodes, double t_min, double t_max) {
  check_rho(spec);
  if (num_nodes < 2) throw ParameterError("make_schedule: N must be >= 2");
  if (!(t_min > 0.0) || !(t_max > t_min)) throw DomainError("make_schedule: need 0 < t_min < t_max");
  std::vector<double> times(static_cast<std::size_t>(num_nodes));
  const double denom = static_cast<double>(num_nodes - 1);
  for (int n = 0; n < num_nodes; ++n) {
    times[static_cast<std::size_t>(n)] = interpolate(spec, t_min, t_max, n / denom);
  }
  times.front() = t_min;
  times.back() = t_max;
  return TimeSchedule(std::move(times), spec);
}

TimeSchedule refine_teacher(const TimeSchedule& schedule, int m) {
  if (m < 1) throw ParameterError("refine_teacher: M must be >= 1");
  const auto& spec = schedule.spec();
  std::vector<double> times;
  times.reserve((schedule.size() - 1) * static_cast<std::size_t>(m + 1) + 1);
  for (std::size_t n = 0; n + 1 < schedule.size(); ++n) {
    times.push_back(schedule[n]);
    for (int i = 1; i <= m; ++i) {
      times.push_back(interpolate(spec, schedule[n], schedule[n + 1], static_cast<double>(i) / (m + 1)));
    }
  }
  times.push_back(schedule.t_max());
  return TimeSchedule(std::move(times), spec);
}

double geometric_intermediate(double t_lo, double t_hi, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw ParameterError("geometric_intermediate: r must lie in (0, 1]");
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw DomainError("geometric_intermediate: need 0 < t_lo < t_hi");
  return std::pow(t_lo, r) * std::pow(t_hi, 1.0 - r);
}

}  // namespace amedlab
