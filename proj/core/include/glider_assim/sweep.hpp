#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "glider_assim/experiment_config.hpp"
#include "glider_assim/strategy_sim.hpp"

namespace glider_assim {

struct SweepOptions {
  /// Everything except flow, cohort size, strategy, seed and output dir is
  /// taken from here.
  ExperimentConfig base;
  std::vector<FlowCase> flows{kAllFlowCases.begin(), kAllFlowCases.end()};
  std::vector<int> cohorts{1, 2, 5, 10};
  std::vector<StrategyKind> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  int seeds = 10;
  /// 0 selects the hardware concurrency.
  int threads = 0;
  /// Empty: keep results in memory only.
  std::filesystem::path out_dir;
  /// Called after every finished run (from worker threads, serialized).
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct SweepRun {
  ExperimentConfig config;
  bool ok = false;
  std::string error;
  std::vector<double> trace;
  std::vector<double> rms;
  double final_trace = 0.0;
  double final_rms = 0.0;
  /// min over rows of (smallest covariance eigenvalue / trace).
  double worst_eigen_ratio = 0.0;
  std::vector<EventLog> events;
  double seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRun> runs;

  std::size_t failures() const;
};

/// `<flow>_K<k>_<strategy>_seed<s>`
std::string run_directory_name(const ExperimentConfig& config);

std::vector<ExperimentConfig> sweep_grid(const SweepOptions& options);

/// Runs every grid point on a worker pool. Results are in grid order
/// regardless of scheduling. When out_dir is set, each run writes its own
/// directory and summary.csv / events.csv are written after all runs finish.
SweepResult run_sweep(const SweepOptions& options);

void write_summary_csv(std::ostream& out, const SweepResult& result);
void write_events_csv(std::ostream& out, const SweepResult& result);

}  // namespace glider_assim
