#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "glider_assim/flow_model.hpp"
#include "glider_assim/objective.hpp"

namespace glider_assim {

/// Assimilation window (t_start, t_end].
struct Window {
  double t_start = 0.0;
  double t_end = 0.0;

  double length() const { return t_end - t_start; }
};

enum class PathInit {
  uniform,        ///< z(t) = z_start
  straight_line,  ///< constant velocity v(z_start) + u_max * ascent direction
  advected,       ///< estimated flow plus a fixed heading along the ascent direction
};

struct SolverSettings {
  int interior_points = 50;
  /// Initial artificial-time step; 0 selects 0.25 h^2.
  double dtau = 0.0;
  bool adaptive_dtau = true;
  double residual_tol = 1e-6;
  long max_tau_steps = 200000;
  /// Give up when the residual has not improved by 1% for this many steps.
  long stall_steps = 4000;
  /// Terminal-condition regularization; 0 solves unregularized first and
  /// retries failures with gamma = u_max * dt * ||d2 gamma / dz2||_F.
  double gamma_reg = 0.0;
  int gauss_seidel_max_sweeps = 20;
  PathInit init = PathInit::uniform;
  GradientMode gradient_mode = GradientMode::analytic;
  bool record_history = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

class SolverNumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positions on a uniform grid of M interior nodes plus both endpoints.
struct PathGrid {
  double t_start = 0.0;
  double t_end = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> points;

  static PathGrid constant(const Window& window, int interior_points,
                           const Vec2& z);

  int interior_points() const { return static_cast<int>(points.rows()) - 2; }
  int node_count() const { return static_cast<int>(points.rows()); }
  double spacing() const { return (t_end - t_start) / (interior_points() + 1); }
  double time(int i) const { return t_start + i * spacing(); }
  Vec2 point(int i) const { return points.row(i).transpose(); }
  Vec2 terminal() const { return point(node_count() - 1); }
};

/// Heading angle per grid node, unwrapped so consecutive nodes differ by
/// less than pi.
struct HeadingPath {
  double t_start = 0.0;
  double t_end = 0.0;
  Eigen::VectorXd theta;

  /// Linear interpolation in t, clamped to the window.
  double at(double t) const;
};

/// Node-wise ż on the grid: central differences inside, one-sided
/// second-order differences at both ends.
Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> path_velocity(
    const PathGrid& path);

HeadingPath extract_headings(const PathGrid& path,
                             const LinearFlowField& flow_estimate);

/// ||ż - v(z)|| at every node.
Eigen::VectorXd relative_speeds(const PathGrid& path,
                                const LinearFlowField& flow_estimate);

/// Control part of the terminal condition for one glider, given its
/// ascent direction block g.
Vec2 regularized_control(const Vec2& g, double u_max, double gamma_reg);

/// Required ż at t_end for every glider, stacked: v(z_k) plus the
/// (regularized) ascent control.
Eigen::VectorXd terminal_bc_velocity(std::span<const Vec2> z_end,
                                     const Objective& objective,
                                     const LinearFlowField& flow_estimate,
                                     double u_max, double gamma_reg);

/// Required terminal velocity of one glider as a function of its endpoint.
using TerminalCondition = std::function<Vec2(const Vec2&)>;

/// Max-norm over interior nodes of the second-order BVP residual.
double interior_residual(const PathGrid& path,
                         const LinearFlowField& flow_estimate, double u_max);

/// One semi-implicit artificial-time step. Returns the interior residual of
/// the updated path.
double relaxation_step(PathGrid& path, const TerminalCondition& terminal_bc,
                       const LinearFlowField& flow_estimate, double u_max,
                       double dtau);

/// Work arrays and state for repeated relaxation steps on one path. The
/// path is held as displacement from its fixed start so that second
/// differences keep full precision far from the origin.
class PathRelaxer {
 public:
  PathRelaxer(const PathGrid& initial, const LinearFlowField& flow_estimate,
              double u_max, TerminalCondition terminal_bc);

  /// Advances one step of size dtau; returns the interior residual.
  double step(double dtau);

  double interior_residual() const { return interior_residual_; }
  /// |one-sided ż(t_end) - required terminal velocity|, max-norm.
  double terminal_mismatch() const { return terminal_mismatch_; }

  PathGrid path() const;

 private:
  void evaluate_state();

  double t_start_;
  double t_end_;
  int interior_;
  double h_;
  Vec2 start_;
  Vec2 start_velocity_;
  Mat2 A_;
  double inv_u2_;
  TerminalCondition terminal_bc_;

  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> disp_;
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> forcing_;
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> rhs_;
  Eigen::VectorXd cprime_;
  Vec2 terminal_velocity_ = Vec2::Zero();
  double interior_residual_ = 0.0;
  double terminal_mismatch_ = 0.0;
};

/// Inputs shared by every glider solve in one window.
struct PlanningContext {
  const Objective& objective;
  LinearFlowField flow_estimate;
  double u_max = 1.0;
  Window window;
};

struct GliderPlan {
  PathGrid path;
  HeadingPath heading;
  bool converged = false;
  double gamma_reg = 0.0;
  long steps = 0;
  double residual = std::numeric_limits<double>::infinity();
  double final_dtau = 0.0;
  std::vector<double> residual_history;

  bool regularized() const { return gamma_reg > 0.0; }
};

/// Relaxes glider `index`'s path to steady state with the other gliders'
/// terminal positions in `cohort_terminals` frozen. Non-convergence is
/// reported through GliderPlan::converged. Throws SolverNumericalError if
/// the path becomes non-finite.
GliderPlan solve_glider_path(const Vec2& z_start, std::size_t index,
                             std::span<const Vec2> cohort_terminals,
                             const PlanningContext& context,
                             const SolverSettings& settings, double gamma_reg,
                             const PathGrid* warm_start = nullptr);

/// Single-glider convenience form.
GliderPlan solve_glider_path(const Vec2& z_start,
                             const PlanningContext& context,
                             const SolverSettings& settings);

struct SolverEvent {
  enum class Kind { regularized_retry, regularization_failed, sweep_limit };
  Kind kind;
  int glider = -1;
  double gamma = 0.0;
};

std::string_view to_string(SolverEvent::Kind kind);

struct CohortPlan {
  std::vector<GliderPlan> gliders;
  /// Gliders whose solve failed even after regularization.
  std::vector<bool> failed;
  bool converged = false;
  /// Gauss-Seidel sweeps that moved some terminal position by more than
  /// the residual tolerance.
  int sweeps = 0;
  std::vector<SolverEvent> events;
};

CohortPlan solve_cohort(std::span<const Vec2> starts,
                        const PlanningContext& context,
                        const SolverSettings& settings);

/// Human-readable dump of a cohort solve: per-glider status, residual
/// history and final path.
void write_solver_diagnostics(std::ostream& out, const CohortPlan& plan);

}  // namespace glider_assim
