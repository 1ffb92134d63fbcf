#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "glider_assim/assimilation.hpp"

namespace glider_assim {

enum class GradientMode { analytic, finite_difference };

/// Terminal utility the planner ascends, as a function of all K glider
/// positions at the next observation time. Implementations may keep
/// scratch buffers, so a single instance must not be shared across threads.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual double value(std::span<const Vec2> positions) const = 0;

  /// Stacked d(utility)/dz into `out` (resized to 2K).
  virtual void gradient(std::span<const Vec2> positions,
                        Eigen::VectorXd& out) const = 0;

  Eigen::VectorXd gradient(std::span<const Vec2> positions) const {
    Eigen::VectorXd out;
    gradient(positions, out);
    return out;
  }
};

/// Expected reduction of the posterior covariance trace, tr(P) - gamma(z).
/// Ascending it descends the expected posterior trace.
class TraceReductionObjective final : public Objective {
 public:
  TraceReductionObjective(const ParamCov& cov, double noise_var,
                          GradientMode mode = GradientMode::analytic,
                          double fd_step = 1e-5);

  using Objective::gradient;
  double value(std::span<const Vec2> positions) const override;
  void gradient(std::span<const Vec2> positions,
                Eigen::VectorXd& out) const override;

 private:
  GradientMode mode_;
  double fd_step_;
  mutable PosteriorTraceEvaluator eval_;
  mutable Positions scratch_;
};

/// -1/2 (z - c)^T B (z - c). With no B the identity of matching size is used.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective() = default;
  explicit QuadraticObjective(Eigen::MatrixXd B,
                              std::optional<Eigen::VectorXd> center = {});

  using Objective::gradient;
  double value(std::span<const Vec2> positions) const override;
  void gradient(std::span<const Vec2> positions,
                Eigen::VectorXd& out) const override;

 private:
  Eigen::VectorXd offset(std::span<const Vec2> positions) const;

  std::optional<Eigen::MatrixXd> B_;
  std::optional<Eigen::VectorXd> center_;
};

/// Frobenius norm of the Hessian of `objective`, by central differences of
/// its gradient.
double hessian_frobenius_norm(const Objective& objective,
                              std::span<const Vec2> positions,
                              double step = 1e-4);

}  // namespace glider_assim
