#include "glider_assim/csv_output.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace glider_assim {
namespace {

void write_file(const std::filesystem::path& path,
                void (*writer)(std::ostream&, const RunRecord&),
                const RunRecord& record) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out, record);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_metrics_csv(std::ostream& out, const RunRecord& record) {
  const int count = record.config.gliders;
  out << "obs_index,time,trace,rms";
  for (int k = 1; k <= count; ++k) out << ",g" << k << "_x,g" << k << "_y";
  out << '\n';
  for (const MetricsRow& row : record.rows) {
    out << row.index << ',' << format_number(row.time) << ','
        << format_number(row.trace) << ',' << format_number(row.rms);
    for (const Vec2& z : row.positions) {
      out << ',' << format_number(z.x()) << ',' << format_number(z.y());
    }
    out << '\n';
  }
}

void write_paths_csv(std::ostream& out, const RunRecord& record) {
  const std::string strategy(to_string(record.config.strategy));
  out << "strategy,glider,t,x,y\n";
  for (std::size_t k = 0; k < record.trajectories.size(); ++k) {
    for (const TrajectorySample& s : record.trajectories[k]) {
      out << strategy << ',' << k + 1 << ',' << format_number(s.t) << ','
          << format_number(s.z.x()) << ',' << format_number(s.z.y()) << '\n';
    }
  }
}

void write_run_outputs(const std::filesystem::path& dir, const RunRecord& record) {
  std::filesystem::create_directories(dir);
  write_file(dir / "metrics.csv", &write_metrics_csv, record);
  write_file(dir / "paths.csv", &write_paths_csv, record);
  std::ofstream resolved(dir / "config.resolved", std::ios::binary | std::ios::trunc);
  if (!resolved) throw std::runtime_error("cannot write config.resolved");
  resolved << to_json(record.config);
}

}  // namespace glider_assim
