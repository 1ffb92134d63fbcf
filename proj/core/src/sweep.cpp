#include "glider_assim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "glider_assim/csv_output.hpp"

namespace glider_assim {
namespace {

SweepRun execute(const ExperimentConfig& config) {
  SweepRun run;
  run.config = config;
  const auto started = std::chrono::steady_clock::now();
  try {
    const RunRecord record = run_experiment(config);
    if (!config.out_dir.empty()) write_run_outputs(config.out_dir, record);
    run.ok = true;
    run.worst_eigen_ratio = std::numeric_limits<double>::infinity();
    for (const MetricsRow& row : record.rows) {
      run.trace.push_back(row.trace);
      run.rms.push_back(row.rms);
      run.worst_eigen_ratio =
          std::min(run.worst_eigen_ratio, row.min_eigenvalue / row.trace);
    }
    run.final_trace = run.trace.back();
    run.final_rms = run.rms.back();
    run.events = record.events;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              started)
                    .count();
  return run;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c == '\n' ? ' ' : c;
  }
  return quoted + "\"";
}

}  // namespace

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(std::count_if(
      runs.begin(), runs.end(), [](const SweepRun& r) { return !r.ok; }));
}

std::string run_directory_name(const ExperimentConfig& config) {
  return std::string(to_string(config.flow)) + "_K" +
         std::to_string(config.gliders) + "_" +
         std::string(to_string(config.strategy)) + "_seed" +
         std::to_string(config.seed);
}

std::vector<ExperimentConfig> sweep_grid(const SweepOptions& options) {
  std::vector<ExperimentConfig> grid;
  for (FlowCase flow : options.flows) {
    for (int k : options.cohorts) {
      for (StrategyKind strategy : options.strategies) {
        for (int s = 0; s < options.seeds; ++s) {
          ExperimentConfig c = options.base;
          c.flow = flow;
          c.gliders = k;
          c.strategy = strategy;
          c.seed = static_cast<std::uint64_t>(s);
          c.placement.kind = PlacementKind::circle;
          c.placement.positions.clear();
          c.out_dir = options.out_dir.empty()
                          ? std::string()
                          : (options.out_dir / run_directory_name(c)).string();
          grid.push_back(std::move(c));
        }
      }
    }
  }
  return grid;
}

SweepResult run_sweep(const SweepOptions& options) {
  const std::vector<ExperimentConfig> grid = sweep_grid(options);
  SweepResult result;
  result.runs.resize(grid.size());

  unsigned threads = options.threads > 0
                         ? static_cast<unsigned>(options.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(grid.size(), 1));

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      result.runs[i] = execute(grid[i]);
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(++done, grid.size());
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    std::ofstream summary(options.out_dir / "summary.csv", std::ios::binary);
    write_summary_csv(summary, result);
    std::ofstream events(options.out_dir / "events.csv", std::ios::binary);
    write_events_csv(events, result);
  }
  return result;
}

void write_summary_csv(std::ostream& out, const SweepResult& result) {
  out << "flow,gliders,strategy,seed,status,final_trace,final_rms,"
         "regularized_retries,fallbacks,error\n";
  for (const SweepRun& run : result.runs) {
    long retries = 0;
    long fallbacks = 0;
    for (const EventLog& e : run.events) {
      if (e.event.kind == SolverEvent::Kind::regularized_retry) ++retries;
      if (e.event.kind == SolverEvent::Kind::regularization_failed) ++fallbacks;
    }
    out << to_string(run.config.flow) << ',' << run.config.gliders << ','
        << to_string(run.config.strategy) << ',' << run.config.seed << ','
        << (run.ok ? "ok" : "aborted") << ','
        << (run.ok ? format_number(run.final_trace) : "") << ','
        << (run.ok ? format_number(run.final_rms) : "") << ',' << retries << ','
        << fallbacks << ',' << csv_field(run.error) << '\n';
  }
}

void write_events_csv(std::ostream& out, const SweepResult& result) {
  out << "flow,gliders,strategy,seed,window,event,glider,gamma\n";
  for (const SweepRun& run : result.runs) {
    for (const EventLog& e : run.events) {
      out << to_string(run.config.flow) << ',' << run.config.gliders << ','
          << to_string(run.config.strategy) << ',' << run.config.seed << ','
          << e.window << ',' << to_string(e.event.kind) << ','
          << (e.event.glider >= 0 ? e.event.glider + 1 : 0) << ','
          << format_number(e.event.gamma) << '\n';
    }
  }
}

}  // namespace glider_assim
