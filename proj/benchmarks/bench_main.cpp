#include <benchmark/benchmark.h>

#include <cmath>

#include "glider_assim/assimilation.hpp"
#include "glider_assim/control_solver.hpp"
#include "glider_assim/objective.hpp"
#include "glider_assim/observation.hpp"
#include "glider_assim/strategy_sim.hpp"

using namespace glider_assim;

namespace {

Positions circle(int k, double radius = 1.0) {
  Positions z;
  for (int i = 0; i < k; ++i) {
    const double a = 6.283185307179586 * i / k;
    z.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return z;
}

// posterior after a few observations so the planner sees an informative state
FilterState warm_filter(const LinearFlowField& truth, int k) {
  FilterState s = FilterState::prior(1e6);
  CounterRng rng = make_stream(7, RngStream::observation_noise);
  for (int j = 0; j < 3; ++j) {
    const Positions z = circle(k, 1.0 + j);
    s = kalman_update(s, build_observation_matrix(z), observe(truth, z, 1.0, rng), 1.0);
  }
  return s;
}

void BM_KalmanUpdate(benchmark::State& state) {
  const auto k = static_cast<int>(state.range(0));
  const LinearFlowField truth = LinearFlowField::from_case(FlowCase::saddle);
  const Positions z = circle(k);
  const ObservationMatrix H = build_observation_matrix(z);
  CounterRng rng = make_stream(1, RngStream::observation_noise);
  const Eigen::VectorXd y = observe(truth, z, 1.0, rng);
  const FilterState prior = FilterState::prior(1e6);
  for (auto _ : state) benchmark::DoNotOptimize(kalman_update(prior, H, y, 1.0));
}
BENCHMARK(BM_KalmanUpdate)->Arg(1)->Arg(5)->Arg(10);

void BM_GammaGradient(benchmark::State& state) {
  const auto k = static_cast<int>(state.range(0));
  const FilterState s = warm_filter(LinearFlowField::from_case(FlowCase::center), k);
  const Positions z = circle(k, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(gamma_gradient(s, z, 1.0));
}
BENCHMARK(BM_GammaGradient)->Arg(1)->Arg(5)->Arg(10);

void BM_SolveGliderPath(benchmark::State& state) {
  const QuadraticObjective q;
  const PlanningContext ctx{q, LinearFlowField::from_case(FlowCase::center), 1.0, {0.0, 1.0}};
  SolverSettings s;
  s.init = PathInit::advected;
  s.interior_points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_glider_path(Vec2(3.0, 1.0), ctx, s));
}
BENCHMARK(BM_SolveGliderPath)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SolveCohort(benchmark::State& state) {
  const auto k = static_cast<int>(state.range(0));
  const LinearFlowField truth = LinearFlowField::from_case(FlowCase::center);
  const FilterState f = warm_filter(truth, k);
  const TraceReductionObjective objective(f.cov, 1.0, GradientMode::analytic);
  const PlanningContext ctx{objective, f.flow_estimate(), 1.0, {0.3, 0.4}};
  SolverSettings s;
  s.init = PathInit::advected;
  const Positions z = circle(k, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_cohort(z, ctx, s));
}
BENCHMARK(BM_SolveCohort)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_RunExperiment(benchmark::State& state) {
  ExperimentConfig c;
  c.flow = FlowCase::saddle;
  c.gliders = static_cast<int>(state.range(0));
  c.strategy = StrategyKind::optimal;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c));
}
BENCHMARK(BM_RunExperiment)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
