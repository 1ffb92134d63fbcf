#include "glider_assim/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace glider_assim {

TraceReductionObjective::TraceReductionObjective(const ParamCov& cov,
                                                 double noise_var,
                                                 GradientMode mode,
                                                 double fd_step)
    : mode_(mode), fd_step_(fd_step), eval_(cov, noise_var) {}

double TraceReductionObjective::value(std::span<const Vec2> positions) const {
  return eval_.cov().trace() - eval_.evaluate(positions);
}

void TraceReductionObjective::gradient(std::span<const Vec2> positions,
                                       Eigen::VectorXd& out) const {
  if (mode_ == GradientMode::analytic) {
    eval_.evaluate(positions, &out);
    out = -out;
    return;
  }
  scratch_.assign(positions.begin(), positions.end());
  out.resize(static_cast<Eigen::Index>(2 * scratch_.size()));
  for (std::size_t k = 0; k < scratch_.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      const double saved = scratch_[k](c);
      scratch_[k](c) = saved + fd_step_;
      const double plus = eval_.evaluate(scratch_);
      scratch_[k](c) = saved - fd_step_;
      const double minus = eval_.evaluate(scratch_);
      scratch_[k](c) = saved;
      out(static_cast<Eigen::Index>(2 * k) + c) =
          -(plus - minus) / (2.0 * fd_step_);
    }
  }
}

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd B,
                                       std::optional<Eigen::VectorXd> center)
    : B_(std::move(B)), center_(std::move(center)) {
  if (B_->rows() != B_->cols()) {
    throw std::invalid_argument("QuadraticObjective: B must be square");
  }
}

Eigen::VectorXd QuadraticObjective::offset(
    std::span<const Vec2> positions) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(2 * positions.size()));
  for (std::size_t k = 0; k < positions.size(); ++k) {
    z.segment<2>(static_cast<Eigen::Index>(2 * k)) = positions[k];
  }
  if (center_) z -= *center_;
  if (B_ && B_->rows() != z.size()) {
    throw std::invalid_argument("QuadraticObjective: B size mismatch");
  }
  return z;
}

double QuadraticObjective::value(std::span<const Vec2> positions) const {
  const Eigen::VectorXd z = offset(positions);
  if (!B_) return -0.5 * z.squaredNorm();
  return -0.5 * z.dot(*B_ * z);
}

void QuadraticObjective::gradient(std::span<const Vec2> positions,
                                  Eigen::VectorXd& out) const {
  const Eigen::VectorXd z = offset(positions);
  if (!B_) {
    out = -z;
    return;
  }
  out = -0.5 * (*B_ + B_->transpose()) * z;
}

double hessian_frobenius_norm(const Objective& objective,
                              std::span<const Vec2> positions, double step) {
  Positions z(positions.begin(), positions.end());
  const auto n = static_cast<Eigen::Index>(2 * z.size());
  Eigen::MatrixXd hessian(n, n);
  Eigen::VectorXd plus;
  Eigen::VectorXd minus;
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      const double saved = z[k](c);
      z[k](c) = saved + step;
      objective.gradient(z, plus);
      z[k](c) = saved - step;
      objective.gradient(z, minus);
      z[k](c) = saved;
      hessian.col(static_cast<Eigen::Index>(2 * k) + c) =
          (plus - minus) / (2.0 * step);
    }
  }
  return hessian.norm();
}

}  // namespace glider_assim
