#include "glider_assim/assimilation.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "glider_assim/objective.hpp"

namespace glider_assim {
namespace {

void require_positive_noise(double noise_var) {
  if (!(noise_var > 0.0)) {
    throw std::invalid_argument("noise variance must be > 0");
  }
}

// Factor S = H P H^T + R; throws when numerically singular.
void factor_innovation(const Eigen::MatrixXd& S,
                       Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  ldlt.compute(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      !(ldlt.rcond() > std::numeric_limits<double>::epsilon())) {
    throw InnovationSingularError(
        "innovation covariance H P H^T + R is numerically singular");
  }
}

ParamCov symmetrized(const ParamCov& P) { return 0.5 * (P + P.transpose()); }

}  // namespace

FilterState FilterState::prior(double variance) {
  FilterState state;
  state.cov = variance * ParamCov::Identity();
  return state;
}

FilterState kalman_update(const FilterState& state, const ObservationMatrix& H,
                          const Eigen::VectorXd& y, double noise_var) {
  require_positive_noise(noise_var);
  if (y.size() != H.rows()) {
    throw std::invalid_argument("kalman_update: y and H sizes differ");
  }
  const ParamCov& P = state.cov;
  const ObservationMatrix HP = H * P;
  Eigen::MatrixXd S = HP * H.transpose();
  S.diagonal().array() += noise_var;

  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  factor_innovation(S, ldlt);

  // G = P H^T S^{-1} = (S^{-1} H P)^T
  const ObservationMatrix SinvHP = ldlt.solve(HP);
  FilterState next;
  next.mean = state.mean + SinvHP.transpose() * (y - H * state.mean);
  next.cov = symmetrized(P - HP.transpose() * SinvHP);
  next.obs_count = state.obs_count + 1;
  return next;
}

GaussianPosterior batch_posterior_oracle(const FlowParameters& prior_mean,
                                         const ParamCov& prior_cov,
                                         const ObservationMatrix& all_H,
                                         const Eigen::VectorXd& all_y,
                                         double noise_var) {
  require_positive_noise(noise_var);
  Eigen::LLT<ParamCov> prior_llt(prior_cov);
  if (prior_llt.info() != Eigen::Success) {
    throw SingularPriorError("batch_posterior_oracle: prior not invertible");
  }
  const ParamCov prior_info = prior_llt.solve(ParamCov::Identity());

  ParamCov info = prior_info;
  FlowParameters rhs = prior_info * prior_mean;
  if (all_H.rows() > 0) {
    info += all_H.transpose() * all_H / noise_var;
    rhs += all_H.transpose() * all_y / noise_var;
  }
  Eigen::LLT<ParamCov> info_llt(info);
  if (info_llt.info() != Eigen::Success) {
    throw SingularPriorError("batch_posterior_oracle: information singular");
  }
  GaussianPosterior post;
  post.cov = symmetrized(info_llt.solve(ParamCov::Identity()));
  post.mean = info_llt.solve(rhs);
  return post;
}

PosteriorTraceEvaluator::PosteriorTraceEvaluator(const ParamCov& cov,
                                                 double noise_var)
    : cov_(cov), noise_var_(noise_var) {
  require_positive_noise(noise_var);
}

double PosteriorTraceEvaluator::evaluate(std::span<const Vec2> positions,
                                         Eigen::VectorXd* gradient) {
  fill_observation_matrix(positions, H_);
  HP_.noalias() = H_ * cov_;
  S_.noalias() = HP_ * H_.transpose();
  S_.diagonal().array() += noise_var_;
  factor_innovation(S_, ldlt_);
  B_ = ldlt_.solve(HP_);  // S^{-1} H P

  const ParamCov reduction = HP_.transpose() * B_;
  const double value = cov_.trace() - reduction.trace();

  if (gradient != nullptr) {
    // d(gamma)/dH = -2 S^{-1} H P P_post
    const ParamCov post = cov_ - reduction;
    const ObservationMatrix dH = -2.0 * B_ * post;
    gradient->resize(static_cast<Eigen::Index>(2 * positions.size()));
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(2 * k);
      (*gradient)(r) = dH(r, 2) + dH(r + 1, 4);
      (*gradient)(r + 1) = dH(r, 3) + dH(r + 1, 5);
    }
  }
  return value;
}

double gamma(const FilterState& state, std::span<const Vec2> positions,
             double noise_var) {
  if (positions.empty()) throw EmptyCohortError("gamma: empty cohort");
  PosteriorTraceEvaluator eval(state.cov, noise_var);
  return eval.evaluate(positions);
}

Eigen::VectorXd gamma_gradient(const FilterState& state,
                               std::span<const Vec2> positions,
                               double noise_var) {
  if (positions.empty()) throw EmptyCohortError("gamma_gradient: empty cohort");
  PosteriorTraceEvaluator eval(state.cov, noise_var);
  Eigen::VectorXd grad;
  eval.evaluate(positions, &grad);
  return grad;
}

Eigen::VectorXd gamma_gradient_fd(const FilterState& state,
                                  std::span<const Vec2> positions,
                                  double noise_var, double step) {
  if (positions.empty()) throw EmptyCohortError("gamma_gradient: empty cohort");
  PosteriorTraceEvaluator eval(state.cov, noise_var);
  Positions z(positions.begin(), positions.end());
  Eigen::VectorXd grad(2 * z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      const double saved = z[k](c);
      z[k](c) = saved + step;
      const double plus = eval.evaluate(z);
      z[k](c) = saved - step;
      const double minus = eval.evaluate(z);
      z[k](c) = saved;
      grad(static_cast<Eigen::Index>(2 * k) + c) = (plus - minus) / (2.0 * step);
    }
  }
  return grad;
}

double gamma_hessian_norm(const FilterState& state,
                          std::span<const Vec2> positions, double noise_var) {
  if (positions.empty()) throw EmptyCohortError("gamma_hessian_norm: empty cohort");
  const TraceReductionObjective objective(state.cov, noise_var);
  return hessian_frobenius_norm(objective, positions);
}

double rms_error(const FilterState& state, const LinearFlowField& truth) {
  return std::sqrt((state.mean - pack(truth)).squaredNorm() / kStateDim);
}

double min_eigenvalue(const ParamCov& cov) {
  Eigen::SelfAdjointEigenSolver<ParamCov> solver(cov, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace glider_assim
