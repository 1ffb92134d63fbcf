#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glider_assim/assimilation.hpp"
#include "glider_assim/control_solver.hpp"
#include "glider_assim/experiment_config.hpp"
#include "glider_assim/random.hpp"

namespace glider_assim {

/// Control of one glider over one window. An empty heading means u = 0.
struct GliderControl {
  enum class Kind { zero, constant, path };
  Kind kind = Kind::zero;
  double theta = 0.0;
  HeadingPath heading;

  static GliderControl zero() { return {}; }
  static GliderControl constant_heading(double theta);
  static GliderControl from_path(HeadingPath heading);

  /// Control velocity at time t for speed u_max.
  Vec2 velocity(double t, double u_max) const;
};

struct ControlPlan {
  std::vector<GliderControl> controls;
  std::vector<SolverEvent> events;
  /// Set for the optimal strategy.
  std::optional<CohortPlan> cohort;
};

/// theta ~ Uniform[0, 2 pi) from 53 random bits.
double draw_uniform_angle(CounterRng& rng);

ControlPlan plan_controls(StrategyKind strategy, std::span<const Vec2> positions,
                          const Window& window, const FilterState& filter,
                          double u_max, double noise_var,
                          const SolverSettings& settings, CounterRng& rng);

struct TrajectorySample {
  double t;
  Vec2 z;
};

/// Classical RK4 of z' = v(z) + u(t) over the window with `substeps` steps.
/// Appends the state after every substep to `samples` when given.
Vec2 simulate_segment(const LinearFlowField& truth, const Vec2& z_start,
                      const GliderControl& control, double u_max,
                      const Window& window, int substeps = 10,
                      std::vector<TrajectorySample>* samples = nullptr);

struct MetricsRow {
  int index = 0;
  double time = 0.0;
  double trace = 0.0;
  double rms = 0.0;
  double min_eigenvalue = 0.0;
  Positions positions;
};

struct HeadingLog {
  int window = 0;
  int glider = 0;
  GliderControl::Kind kind = GliderControl::Kind::zero;
  /// Heading at window start for constant and path controls.
  double theta_start = 0.0;
  double theta_end = 0.0;
};

struct EventLog {
  int window = 0;
  SolverEvent event;
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<MetricsRow> rows;
  std::vector<HeadingLog> headings;
  std::vector<EventLog> events;
  /// Per glider: initial position then every RK4 substep.
  std::vector<std::vector<TrajectorySample>> trajectories;
  FilterState final_state;
};

class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(int window, const std::string& message)
      : std::runtime_error("window " + std::to_string(window) + ": " + message),
        window_(window) {}

  int window() const { return window_; }

 private:
  int window_;
};

/// Closed loop: plan, integrate the truth, observe, assimilate, record.
/// Throws ConfigError for an invalid config and NumericalAbort on
/// non-finite state.
RunRecord run_experiment(const ExperimentConfig& config);

}  // namespace glider_assim
