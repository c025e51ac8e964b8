#include "amedlab/io.hpp"

#include "amedlab/common.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace amedlab {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index d = traj.nodes.empty() ? 0 : traj.nodes.front().x.size();
  out << 't';
  for (Eigen::Index j = 0; j < d; ++j) out << ",x_" << j;
  out << '\n';
  for (const auto& node : traj.nodes) {
    out << format_double(node.t);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(node.x[j]);
    out << '\n';
  }
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory '" + path + "'");
  write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t", 0) != 0) throw ConfigError("trajectory csv: missing header");
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',' ? 1 : 0;
  if (columns < 2) throw ConfigError("trajectory csv: no state columns");
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("trajectory csv: bad number '" + cell + "'");
      }
    }
    if (values.size() != columns) throw ConfigError("trajectory csv: ragged row");
    TrajectoryNode node;
    node.t = values[0];
    node.x = Eigen::Map<const Vector>(values.data() + 1, static_cast<Eigen::Index>(columns - 1));
    traj.nodes.push_back(std::move(node));
  }
  return traj;
}

Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory '" + path + "'");
  return read_trajectory_csv(in);
}

std::string default_output_dir() {
  const char* env = std::getenv("AMEDLAB_OUT_DIR");
  return (env != nullptr && *env != '\0') ? std::string(env) : std::string(".");
}

}  // namespace amedlab
