#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "glider_assim/flow_model.hpp"
#include "glider_assim/observation.hpp"

namespace glider_assim {

using ParamCov = Eigen::Matrix<double, kStateDim, kStateDim>;

/// Raised when H P H^T + R cannot be factored (degenerate configuration).
class InnovationSingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularPriorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian posterior over the six flow parameters.
struct FilterState {
  FlowParameters mean = FlowParameters::Zero();
  ParamCov cov = ParamCov::Zero();
  int obs_count = 0;

  static FilterState prior(double variance);

  LinearFlowField flow_estimate() const { return unpack(mean); }
  double trace() const { return cov.trace(); }
};

FilterState kalman_update(const FilterState& state, const ObservationMatrix& H,
                          const Eigen::VectorXd& y, double noise_var);

struct GaussianPosterior {
  FlowParameters mean;
  ParamCov cov;
};

/// One-shot information-form posterior for stacked observations with
/// R = noise_var I. Independent of the gain-form update above.
GaussianPosterior batch_posterior_oracle(const FlowParameters& prior_mean,
                                         const ParamCov& prior_cov,
                                         const ObservationMatrix& all_H,
                                         const Eigen::VectorXd& all_y,
                                         double noise_var);

/// Expected posterior covariance trace if the cohort observed at `positions`.
double gamma(const FilterState& state, std::span<const Vec2> positions,
             double noise_var);

/// d(gamma)/dz, stacked (x_1, y_1, ..., x_K, y_K).
Eigen::VectorXd gamma_gradient(const FilterState& state,
                               std::span<const Vec2> positions,
                               double noise_var);

/// Central finite-difference gradient of gamma; the trusted reference.
Eigen::VectorXd gamma_gradient_fd(const FilterState& state,
                                  std::span<const Vec2> positions,
                                  double noise_var, double step = 1e-5);

/// Frobenius norm of the 2K x 2K Hessian of gamma (finite differences of
/// the analytic gradient, step 1e-4).
double gamma_hessian_norm(const FilterState& state,
                          std::span<const Vec2> positions, double noise_var);

/// sqrt(||mean - theta_true||^2 / 6).
double rms_error(const FilterState& state, const LinearFlowField& truth);

double min_eigenvalue(const ParamCov& cov);

/// Reusable evaluator of gamma and its gradient for a fixed covariance.
/// Keeps its work buffers between calls; not thread-safe.
class PosteriorTraceEvaluator {
 public:
  PosteriorTraceEvaluator(const ParamCov& cov, double noise_var);

  /// Returns gamma; writes d(gamma)/dz into `gradient` when non-null.
  double evaluate(std::span<const Vec2> positions,
                  Eigen::VectorXd* gradient = nullptr);

  const ParamCov& cov() const { return cov_; }
  double noise_var() const { return noise_var_; }

 private:
  ParamCov cov_;
  double noise_var_;
  ObservationMatrix H_;
  ObservationMatrix HP_;
  Eigen::MatrixXd S_;
  ObservationMatrix B_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

}  // namespace glider_assim
