#include "glider_assim/strategy_sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "glider_assim/objective.hpp"
#include "glider_assim/observation.hpp"

namespace glider_assim {
namespace {

bool finite(const Vec2& z) { return std::isfinite(z.x()) && std::isfinite(z.y()); }

void dump_solver_debug(const std::filesystem::path& out_dir, int window,
                       const CohortPlan& plan) {
  const std::filesystem::path dir = out_dir / "solver_debug";
  std::filesystem::create_directories(dir);
  char name[32];
  std::snprintf(name, sizeof name, "window_%04d.txt", window);
  std::ofstream out(dir / name, std::ios::binary);
  write_solver_diagnostics(out, plan);
}

}  // namespace

GliderControl GliderControl::constant_heading(double theta) {
  GliderControl c;
  c.kind = Kind::constant;
  c.theta = theta;
  return c;
}

GliderControl GliderControl::from_path(HeadingPath heading) {
  GliderControl c;
  c.kind = Kind::path;
  c.heading = std::move(heading);
  return c;
}

Vec2 GliderControl::velocity(double t, double u_max) const {
  switch (kind) {
    case Kind::zero:
      return Vec2::Zero();
    case Kind::constant:
      return u_max * Vec2(std::cos(theta), std::sin(theta));
    case Kind::path: {
      const double th = heading.at(t);
      return u_max * Vec2(std::cos(th), std::sin(th));
    }
  }
  return Vec2::Zero();
}

double draw_uniform_angle(CounterRng& rng) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * std::numbers::pi * unit;
}

ControlPlan plan_controls(StrategyKind strategy, std::span<const Vec2> positions,
                          const Window& window, const FilterState& filter,
                          double u_max, double noise_var,
                          const SolverSettings& settings, CounterRng& rng) {
  ControlPlan plan;
  const std::size_t count = positions.size();
  switch (strategy) {
    case StrategyKind::none:
      plan.controls.assign(count, GliderControl::zero());
      break;
    case StrategyKind::random:
      for (std::size_t k = 0; k < count; ++k) {
        plan.controls.push_back(
            GliderControl::constant_heading(draw_uniform_angle(rng)));
      }
      break;
    case StrategyKind::optimal: {
      const TraceReductionObjective objective(filter.cov, noise_var,
                                              settings.gradient_mode);
      const PlanningContext context{objective, filter.flow_estimate(), u_max,
                                    window};
      CohortPlan cohort = solve_cohort(positions, context, settings);
      for (std::size_t k = 0; k < count; ++k) {
        if (cohort.failed[k]) {
          plan.controls.push_back(GliderControl::zero());
        } else {
          plan.controls.push_back(
              GliderControl::from_path(cohort.gliders[k].heading));
        }
      }
      plan.events = cohort.events;
      plan.cohort = std::move(cohort);
      break;
    }
  }
  return plan;
}

Vec2 simulate_segment(const LinearFlowField& truth, const Vec2& z_start,
                      const GliderControl& control, double u_max,
                      const Window& window, int substeps,
                      std::vector<TrajectorySample>* samples) {
  if (substeps < 1) throw std::invalid_argument("simulate_segment: substeps < 1");
  const double h = window.length() / substeps;
  auto rhs = [&](double t, const Vec2& z) -> Vec2 {
    return truth.velocity(z) + control.velocity(t, u_max);
  };
  Vec2 z = z_start;
  for (int s = 0; s < substeps; ++s) {
    const double t = window.t_start + s * h;
    const Vec2 k1 = rhs(t, z);
    const Vec2 k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1);
    const Vec2 k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2);
    const Vec2 k4 = rhs(t + h, z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (samples) {
      const double t_next = s + 1 == substeps ? window.t_end : t + h;
      samples->push_back({t_next, z});
    }
  }
  return z;
}

RunRecord run_experiment(const ExperimentConfig& config) {
  config.validate();

  RunRecord record;
  record.config = config;
  const LinearFlowField truth = LinearFlowField::from_case(config.flow);
  CounterRng noise_rng = make_stream(config.seed, RngStream::observation_noise);
  CounterRng strategy_rng = make_stream(config.seed, RngStream::strategy);

  Positions positions = initial_positions(config);
  const auto count = positions.size();
  FilterState filter = FilterState::prior(config.prior_var);
  record.trajectories.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    record.trajectories[k].push_back({0.0, positions[k]});
  }
  record.rows.reserve(static_cast<std::size_t>(config.n_obs));

  ObservationMatrix H;
  for (int j = 1; j <= config.n_obs; ++j) {
    const Window window{(j - 1) * config.dt, j * config.dt};

    ControlPlan plan;
    try {
      plan = plan_controls(config.strategy, positions, window, filter,
                           config.u_max, config.noise_var, config.solver,
                           strategy_rng);
    } catch (const SolverNumericalError& e) {
      throw NumericalAbort(j, e.what());
    } catch (const InnovationSingularError& e) {
      throw NumericalAbort(j, e.what());
    }
    for (const SolverEvent& event : plan.events) {
      record.events.push_back({j, event});
    }
    if (config.debug_solver && plan.cohort && !config.out_dir.empty()) {
      dump_solver_debug(config.out_dir, j, *plan.cohort);
    }

    for (std::size_t k = 0; k < count; ++k) {
      const GliderControl& control = plan.controls[k];
      HeadingLog log{j, static_cast<int>(k), control.kind, 0.0, 0.0};
      if (control.kind == GliderControl::Kind::constant) {
        log.theta_start = log.theta_end = control.theta;
      } else if (control.kind == GliderControl::Kind::path) {
        log.theta_start = control.heading.at(window.t_start);
        log.theta_end = control.heading.at(window.t_end);
      }
      record.headings.push_back(log);

      positions[k] = simulate_segment(truth, positions[k], control,
                                      config.u_max, window, 10,
                                      &record.trajectories[k]);
      if (!finite(positions[k])) {
        throw NumericalAbort(j, "glider " + std::to_string(k + 1) +
                                    " position is not finite");
      }
    }

    const Eigen::VectorXd y = observe(truth, positions, config.noise_var, noise_rng);
    fill_observation_matrix(positions, H);
    try {
      filter = kalman_update(filter, H, y, config.noise_var);
    } catch (const InnovationSingularError& e) {
      throw NumericalAbort(j, e.what());
    }
    if (!filter.mean.allFinite() || !filter.cov.allFinite()) {
      throw NumericalAbort(j, "filter state is not finite");
    }

    MetricsRow row;
    row.index = j;
    row.time = window.t_end;
    row.trace = filter.trace();
    row.rms = rms_error(filter, truth);
    row.min_eigenvalue = min_eigenvalue(filter.cov);
    row.positions = positions;
    record.rows.push_back(std::move(row));
  }
  record.final_state = filter;
  return record;
}

}  // namespace glider_assim
