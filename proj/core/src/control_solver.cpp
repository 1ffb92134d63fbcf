#include "glider_assim/control_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace glider_assim {
namespace {

using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

Vec2 rot90(const Vec2& w) { return Vec2(-w.y(), w.x()); }

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void SolverSettings::validate() const {
  require(interior_points >= 2, "interior_points: must be >= 2");
  require(dtau >= 0.0 && std::isfinite(dtau), "dtau: must be >= 0 (0 = auto)");
  require(residual_tol > 0.0, "residual_tol: must be > 0");
  require(max_tau_steps > 0, "max_tau_steps: must be > 0");
  require(stall_steps > 0, "stall_steps: must be > 0");
  require(gamma_reg >= 0.0 && std::isfinite(gamma_reg),
          "gamma_reg: must be >= 0 (0 = auto)");
  require(gauss_seidel_max_sweeps >= 1, "gauss_seidel_max_sweeps: must be >= 1");
}

PathGrid PathGrid::constant(const Window& window, int interior_points,
                            const Vec2& z) {
  PathGrid path;
  path.t_start = window.t_start;
  path.t_end = window.t_end;
  path.points.resize(interior_points + 2, 2);
  path.points.rowwise() = z.transpose();
  return path;
}

double HeadingPath::at(double t) const {
  const auto n = theta.size();
  if (n == 0) return 0.0;
  if (n == 1 || t_end <= t_start) return theta(0);
  const double s = std::clamp((t - t_start) / (t_end - t_start), 0.0, 1.0) *
                   static_cast<double>(n - 1);
  const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), n - 2);
  const double frac = s - static_cast<double>(i);
  return (1.0 - frac) * theta(i) + frac * theta(i + 1);
}

PathMatrix path_velocity(const PathGrid& path) {
  const int n = path.node_count();
  const double h = path.spacing();
  PathMatrix vel(n, 2);
  const auto& z = path.points;
  for (int i = 1; i + 1 < n; ++i) {
    vel.row(i) = (z.row(i + 1) - z.row(i - 1)) / (2.0 * h);
  }
  vel.row(0) = (-3.0 * z.row(0) + 4.0 * z.row(1) - z.row(2)) / (2.0 * h);
  vel.row(n - 1) =
      (3.0 * z.row(n - 1) - 4.0 * z.row(n - 2) + z.row(n - 3)) / (2.0 * h);
  return vel;
}

HeadingPath extract_headings(const PathGrid& path,
                             const LinearFlowField& flow_estimate) {
  const PathMatrix vel = path_velocity(path);
  HeadingPath heading;
  heading.t_start = path.t_start;
  heading.t_end = path.t_end;
  heading.theta.resize(path.node_count());
  double previous = 0.0;
  for (int i = 0; i < path.node_count(); ++i) {
    const Vec2 w = vel.row(i).transpose() - flow_estimate.velocity(path.point(i));
    double angle = std::atan2(w.y(), w.x());
    if (i > 0) {
      angle += 2.0 * std::numbers::pi *
               std::round((previous - angle) / (2.0 * std::numbers::pi));
    }
    heading.theta(i) = angle;
    previous = angle;
  }
  return heading;
}

Eigen::VectorXd relative_speeds(const PathGrid& path,
                                const LinearFlowField& flow_estimate) {
  const PathMatrix vel = path_velocity(path);
  Eigen::VectorXd speeds(path.node_count());
  for (int i = 0; i < path.node_count(); ++i) {
    speeds(i) =
        (vel.row(i).transpose() - flow_estimate.velocity(path.point(i))).norm();
  }
  return speeds;
}

Vec2 regularized_control(const Vec2& g, double u_max, double gamma_reg) {
  const double norm = g.norm();
  if (gamma_reg > 0.0 && norm <= gamma_reg) {
    return (u_max / gamma_reg) * g;
  }
  if (norm == 0.0) return Vec2::Zero();
  return (u_max / norm) * g;
}

Eigen::VectorXd terminal_bc_velocity(std::span<const Vec2> z_end,
                                     const Objective& objective,
                                     const LinearFlowField& flow_estimate,
                                     double u_max, double gamma_reg) {
  const Eigen::VectorXd g = objective.gradient(z_end);
  Eigen::VectorXd out(g.size());
  for (std::size_t k = 0; k < z_end.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(2 * k);
    out.segment<2>(r) = flow_estimate.velocity(z_end[k]) +
                        regularized_control(g.segment<2>(r), u_max, gamma_reg);
  }
  return out;
}

PathRelaxer::PathRelaxer(const PathGrid& initial,
                         const LinearFlowField& flow_estimate, double u_max,
                         TerminalCondition terminal_bc)
    : t_start_(initial.t_start),
      t_end_(initial.t_end),
      interior_(initial.interior_points()),
      h_(initial.spacing()),
      start_(initial.point(0)),
      start_velocity_(flow_estimate.velocity(initial.point(0))),
      A_(flow_estimate.A),
      inv_u2_(1.0 / (u_max * u_max)),
      terminal_bc_(std::move(terminal_bc)) {
  if (interior_ < 2) {
    throw std::invalid_argument("PathRelaxer: need at least 2 interior points");
  }
  disp_ = initial.points.rowwise() - start_.transpose();
  disp_.row(0).setZero();
  forcing_.setZero(interior_ + 2, 2);
  rhs_.setZero(interior_ + 2, 2);
  cprime_.setZero(interior_ + 2);
  evaluate_state();
}

void PathRelaxer::evaluate_state() {
  const double inv_2h = 0.5 / h_;
  const double inv_h2 = 1.0 / (h_ * h_);
  double residual = 0.0;
  for (int i = 1; i <= interior_; ++i) {
    const Vec2 prev = disp_.row(i - 1).transpose();
    const Vec2 here = disp_.row(i).transpose();
    const Vec2 next = disp_.row(i + 1).transpose();
    const Vec2 zdot = (next - prev) * inv_2h;
    const Vec2 w = zdot - (start_velocity_ + A_ * here);
    const Vec2 jw = rot90(w);
    const double s = jw.dot(A_.transpose() * w);
    const Vec2 f = -A_ * zdot + (inv_u2_ * s) * jw;
    forcing_.row(i) = f.transpose();
    const Vec2 r = (next - 2.0 * here + prev) * inv_h2 + f;
    residual = std::max(residual, r.cwiseAbs().maxCoeff());
  }
  interior_residual_ = residual;

  const int last = interior_ + 1;
  const Vec2 z_end = start_ + disp_.row(last).transpose();
  terminal_velocity_ = terminal_bc_(z_end);
  const Vec2 one_sided = (disp_.row(last - 2) - 4.0 * disp_.row(last - 1) +
                          3.0 * disp_.row(last)).transpose() * inv_2h;
  terminal_mismatch_ = (one_sided - terminal_velocity_).cwiseAbs().maxCoeff();
  if (!finite(terminal_velocity_)) terminal_mismatch_ = terminal_velocity_.x();
}

double PathRelaxer::step(double dtau) {
  const int m = interior_;
  const double r = dtau / (h_ * h_);
  const double diag = 1.0 + 2.0 * r;

  // Forward sweep of (1 + 2r) x_i - r (x_{i-1} + x_{i+1}) = d_i + dtau F_i,
  // rows 1..M, with x_0 = 0 (displacement frame).
  for (int i = 1; i <= m; ++i) {
    const double denom = diag + (i > 1 ? r * cprime_(i - 1) : 0.0);
    cprime_(i) = -r / denom;
    Eigen::RowVector2d d = disp_.row(i) + dtau * forcing_.row(i);
    if (i > 1) d += r * rhs_.row(i - 1);
    rhs_.row(i) = d / denom;
  }

  // Terminal row: x_{M-1} - 4 x_M + 3 x_{M+1} = 2 h b, with x_{M-1} and x_M
  // eliminated through the sweep.
  const double c_m1 = cprime_(m - 1);
  const double c_m = cprime_(m);
  const double coef = 3.0 + (c_m1 + 4.0) * c_m;
  const Eigen::RowVector2d terminal =
      (2.0 * h_ * terminal_velocity_.transpose() - rhs_.row(m - 1) +
       (c_m1 + 4.0) * rhs_.row(m)) / coef;

  disp_.row(m + 1) = terminal;
  for (int i = m; i >= 1; --i) {
    disp_.row(i) = rhs_.row(i) - cprime_(i) * disp_.row(i + 1);
  }
  evaluate_state();
  return interior_residual_;
}

PathGrid PathRelaxer::path() const {
  PathGrid out;
  out.t_start = t_start_;
  out.t_end = t_end_;
  out.points = disp_.rowwise() + start_.transpose();
  out.points.row(0) = start_.transpose();
  return out;
}

double interior_residual(const PathGrid& path,
                         const LinearFlowField& flow_estimate, double u_max) {
  const PathRelaxer relaxer(path, flow_estimate, u_max,
                            [](const Vec2&) { return Vec2::Zero().eval(); });
  return relaxer.interior_residual();
}

double relaxation_step(PathGrid& path, const TerminalCondition& terminal_bc,
                       const LinearFlowField& flow_estimate, double u_max,
                       double dtau) {
  if (!(dtau > 0.0)) throw std::invalid_argument("relaxation_step: dtau <= 0");
  PathRelaxer relaxer(path, flow_estimate, u_max, terminal_bc);
  const double residual = relaxer.step(dtau);
  path = relaxer.path();
  return residual;
}

namespace {

PathGrid initial_path(const Vec2& z_start, const Window& window,
                      const SolverSettings& settings,
                      const LinearFlowField& flow, const Vec2& control) {
  PathGrid path =
      PathGrid::constant(window, settings.interior_points, z_start);
  if (settings.init == PathInit::uniform) return path;

  if (settings.init == PathInit::straight_line) {
    const Vec2 velocity = flow.velocity(z_start) + control;
    for (int i = 1; i < path.node_count(); ++i) {
      path.points.row(i) =
          (z_start + (path.time(i) - window.t_start) * velocity).transpose();
    }
    return path;
  }

  LinearFlowField steered = flow;
  steered.v0 += control;
  for (int i = 1; i < path.node_count(); ++i) {
    path.points.row(i) =
        analytic_uncontrolled_path(steered, z_start, path.time(i) - window.t_start)
            .transpose();
  }
  return path;
}

bool usable_warm_start(const PathGrid* warm, const Vec2& z_start,
                       const Window& window, int interior_points) {
  return warm != nullptr && warm->interior_points() == interior_points &&
         warm->t_start == window.t_start && warm->t_end == window.t_end &&
         warm->point(0) == z_start && warm->points.allFinite();
}

}  // namespace

GliderPlan solve_glider_path(const Vec2& z_start, std::size_t index,
                             std::span<const Vec2> cohort_terminals,
                             const PlanningContext& context,
                             const SolverSettings& settings, double gamma_reg,
                             const PathGrid* warm_start) {
  settings.validate();
  if (!(context.window.length() > 0.0)) {
    throw std::invalid_argument("solve_glider_path: window length must be > 0");
  }
  if (!(context.u_max > 0.0)) {
    throw std::invalid_argument("solve_glider_path: u_max must be > 0");
  }
  if (index >= cohort_terminals.size()) {
    throw std::out_of_range("solve_glider_path: glider index out of range");
  }
  if (!finite(z_start) || !context.flow_estimate.v0.allFinite() ||
      !context.flow_estimate.A.allFinite()) {
    throw SolverNumericalError("solve_glider_path: non-finite input");
  }

  const LinearFlowField& flow = context.flow_estimate;
  const double u_max = context.u_max;
  const auto slot = static_cast<Eigen::Index>(2 * index);

  Positions frozen(cohort_terminals.begin(), cohort_terminals.end());
  Eigen::VectorXd grad;
  auto ascent = [&](const Vec2& z_end) -> Vec2 {
    frozen[index] = z_end;
    context.objective.gradient(frozen, grad);
    return grad.segment<2>(slot);
  };
  TerminalCondition terminal_bc = [&](const Vec2& z_end) -> Vec2 {
    return flow.velocity(z_end) +
           regularized_control(ascent(z_end), u_max, gamma_reg);
  };

  const PathGrid start_path =
      usable_warm_start(warm_start, z_start, context.window,
                        settings.interior_points)
          ? *warm_start
          : initial_path(z_start, context.window, settings, flow,
                         regularized_control(ascent(z_start), u_max, gamma_reg));

  PathRelaxer relaxer(start_path, flow, u_max, terminal_bc);

  GliderPlan plan;
  plan.gamma_reg = gamma_reg;
  const double h = start_path.spacing();
  double dtau = settings.dtau > 0.0 ? settings.dtau : 0.25 * h * h;
  const double dtau_floor = dtau;

  auto combined = [&] {
    return std::max(relaxer.interior_residual(), relaxer.terminal_mismatch());
  };
  double current = combined();
  if (!std::isfinite(current)) {
    throw SolverNumericalError("solve_glider_path: non-finite initial residual");
  }
  double previous = current;
  double best = current;
  long best_step = 0;
  int monotone = 0;

  if (current < settings.residual_tol) plan.converged = true;
  for (long step = 1; !plan.converged && step <= settings.max_tau_steps; ++step) {
    relaxer.step(dtau);
    current = combined();
    plan.steps = step;
    if (settings.record_history) plan.residual_history.push_back(current);
    if (!std::isfinite(current)) {
      throw SolverNumericalError("solve_glider_path: path became non-finite at step " +
                                 std::to_string(step));
    }
    if (current < settings.residual_tol) {
      plan.converged = true;
      break;
    }
    if (settings.adaptive_dtau) {
      if (current > previous) {
        dtau = std::max(0.5 * dtau, dtau_floor);
        monotone = 0;
      } else if (++monotone >= 20) {
        dtau *= 1.5;
        monotone = 0;
      }
    }
    if (current < 0.99 * best) {
      best = current;
      best_step = step;
    } else if (step - best_step > settings.stall_steps) {
      break;
    }
    previous = current;
  }

  plan.residual = current;
  plan.final_dtau = dtau;
  plan.path = relaxer.path();
  plan.heading = extract_headings(plan.path, flow);
  return plan;
}

GliderPlan solve_glider_path(const Vec2& z_start,
                             const PlanningContext& context,
                             const SolverSettings& settings) {
  const Vec2 terminals[1] = {z_start};
  return solve_glider_path(z_start, 0, terminals, context, settings,
                           settings.gamma_reg);
}

std::string_view to_string(SolverEvent::Kind kind) {
  switch (kind) {
    case SolverEvent::Kind::regularized_retry:
      return "regularized_retry";
    case SolverEvent::Kind::regularization_failed:
      return "fallback_zero_control";
    case SolverEvent::Kind::sweep_limit:
      return "sweep_limit";
  }
  return "unknown";
}

CohortPlan solve_cohort(std::span<const Vec2> starts,
                        const PlanningContext& context,
                        const SolverSettings& settings) {
  settings.validate();
  if (starts.empty()) throw EmptyCohortError("solve_cohort: empty cohort");

  const std::size_t count = starts.size();
  const double dt = context.window.length();
  CohortPlan cohort;
  cohort.gliders.resize(count);
  cohort.failed.assign(count, false);
  std::vector<bool> solved(count, false);
  std::vector<double> gammas(count, settings.gamma_reg);
  Positions terminals(starts.begin(), starts.end());

  bool settled = false;
  for (int sweep = 1; sweep <= settings.gauss_seidel_max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      if (cohort.failed[k]) continue;
      const PathGrid* warm = solved[k] ? &cohort.gliders[k].path : nullptr;
      GliderPlan plan = solve_glider_path(starts[k], k, terminals, context,
                                          settings, gammas[k], warm);
      if (!plan.converged && gammas[k] == 0.0) {
        Positions at = terminals;
        if (finite(plan.path.terminal())) at[k] = plan.path.terminal();
        const double gamma = context.u_max * dt *
                             hessian_frobenius_norm(context.objective, at);
        cohort.events.push_back(
            {SolverEvent::Kind::regularized_retry, static_cast<int>(k), gamma});
        if (gamma > 0.0 && std::isfinite(gamma)) {
          gammas[k] = gamma;
          plan = solve_glider_path(starts[k], k, terminals, context, settings,
                                   gamma, nullptr);
        }
      }

      Vec2 terminal;
      if (plan.converged) {
        terminal = plan.path.terminal();
        solved[k] = true;
      } else {
        cohort.failed[k] = true;
        cohort.events.push_back({SolverEvent::Kind::regularization_failed,
                                 static_cast<int>(k), gammas[k]});
        terminal = analytic_uncontrolled_path(context.flow_estimate, starts[k], dt);
      }
      max_change = std::max(max_change, (terminal - terminals[k]).cwiseAbs().maxCoeff());
      terminals[k] = terminal;
      cohort.gliders[k] = std::move(plan);
    }
    if (max_change <= settings.residual_tol) {
      settled = true;
      break;
    }
    cohort.sweeps = sweep;
    if (count == 1) {
      settled = true;
      break;
    }
  }
  if (!settled) {
    cohort.events.push_back({SolverEvent::Kind::sweep_limit, -1, 0.0});
  }
  cohort.converged = std::none_of(cohort.failed.begin(), cohort.failed.end(),
                                  [](bool f) { return f; });
  return cohort;
}

void write_solver_diagnostics(std::ostream& out, const CohortPlan& plan) {
  out.precision(17);
  out << "sweeps " << plan.sweeps << " converged " << plan.converged << '\n';
  for (const SolverEvent& event : plan.events) {
    out << "event " << to_string(event.kind) << " glider " << event.glider
        << " gamma " << event.gamma << '\n';
  }
  for (std::size_t k = 0; k < plan.gliders.size(); ++k) {
    const GliderPlan& g = plan.gliders[k];
    out << "glider " << k << " converged " << g.converged << " failed "
        << plan.failed[k] << " gamma " << g.gamma_reg << " steps " << g.steps
        << " residual " << g.residual << " dtau " << g.final_dtau << '\n';
    out << "residual_history";
    for (double r : g.residual_history) out << ' ' << r;
    out << '\n';
    for (int i = 0; i < g.path.node_count(); ++i) {
      out << "node " << i << ' ' << g.path.time(i) << ' ' << g.path.points(i, 0)
          << ' ' << g.path.points(i, 1) << ' '
          << (g.heading.theta.size() > i ? g.heading.theta(i) : 0.0) << '\n';
    }
  }
}

}  // namespace glider_assim
