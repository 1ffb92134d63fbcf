#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "glider_assim/strategy_sim.hpp"

namespace glider_assim {

/// Decimal, 17 significant digits.
std::string format_number(double value);

/// obs_index,time,trace,rms,g1_x,g1_y,...,gK_x,gK_y
void write_metrics_csv(std::ostream& out, const RunRecord& record);

/// strategy,glider,t,x,y (gliders numbered from 1).
void write_paths_csv(std::ostream& out, const RunRecord& record);

/// Writes metrics.csv, paths.csv and config.resolved into `dir`, creating it.
void write_run_outputs(const std::filesystem::path& dir, const RunRecord& record);

}  // namespace glider_assim
