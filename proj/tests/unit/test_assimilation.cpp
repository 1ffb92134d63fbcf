#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "glider_assim/assimilation.hpp"
#include "glider_assim/objective.hpp"
#include "test_helpers.hpp"

using namespace glider_assim;

namespace {

// Closed form for P = s2 I and a single glider (see tests/oracles).
struct Isotropic {
  double s2;
  double r;

  double q(const Vec2& z) const { return 1.0 + z.squaredNorm(); }
  double value(const Vec2& z) const {
    return 6 * s2 - 2 * s2 * s2 * q(z) / (s2 * q(z) + r);
  }
  double f1(const Vec2& z) const {
    return -2 * s2 * s2 * r / std::pow(s2 * q(z) + r, 2);
  }
  double f2(const Vec2& z) const {
    return 4 * s2 * s2 * s2 * r / std::pow(s2 * q(z) + r, 3);
  }
  Vec2 gradient(const Vec2& z) const { return 2 * f1(z) * z; }
  Mat2 hessian(const Vec2& z) const {
    return 4 * f2(z) * z * z.transpose() + 2 * f1(z) * Mat2::Identity();
  }
};

FilterState isotropic_state(double s2) {
  FilterState s;
  s.cov = s2 * ParamCov::Identity();
  return s;
}

ParamCov joseph(const ParamCov& P, const ObservationMatrix& H, double r) {
  const Eigen::MatrixXd S = H * P * H.transpose() +
                            r * Eigen::MatrixXd::Identity(H.rows(), H.rows());
  const Eigen::MatrixXd G = P * H.transpose() * S.inverse();
  const ParamCov IGH = ParamCov::Identity() - G * H;
  return IGH * P * IGH.transpose() + r * G * G.transpose();
}

TEST(KalmanUpdate, ZeroCovarianceIsFixed) {
  FilterState s;
  s.mean << 1, 2, 3, 4, 5, 6;
  const Positions z{{0.5, 0.5}};
  Eigen::VectorXd y(2);
  y << 10, -10;
  const FilterState out = kalman_update(s, build_observation_matrix(z), y, 1.0);
  EXPECT_EQ(out.mean, s.mean);
  EXPECT_TRUE(out.cov.isZero(0.0));
  EXPECT_EQ(out.obs_count, 1);
}

TEST(KalmanUpdate, ScalarConjugateExample) {
  const FilterState prior = FilterState::prior(1e6);
  const Positions z{{0.0, 0.0}};
  Eigen::VectorXd y(2);
  y << 1, -1;
  const FilterState post = kalman_update(prior, build_observation_matrix(z), y, 1.0);
  const double w = 1e6 / (1e6 + 1);
  EXPECT_NEAR(post.mean(0), w, 1e-12);
  EXPECT_NEAR(post.mean(1), -w, 1e-12);
  for (int i = 2; i < 6; ++i) EXPECT_EQ(post.mean(i), 0.0);
  EXPECT_NEAR(post.cov(0, 0), 1.0 / (1e-6 + 1.0), 1e-9);
  EXPECT_NEAR(post.cov(1, 1), 1.0 / (1e-6 + 1.0), 1e-9);
  for (int i = 2; i < 6; ++i) EXPECT_EQ(post.cov(i, i), 1e6);
}

TEST(KalmanUpdate, SingularInnovationThrows) {
  FilterState s;
  s.cov(0, 0) = 1e30;
  const Positions z{{1.0, 1.0}, {1.0, 1.0}};
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  EXPECT_THROW(kalman_update(s, build_observation_matrix(z), y, 1e-20),
               InnovationSingularError);
}

TEST(KalmanUpdate, MatchesJosephForm) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    FilterState s;
    s.cov = test_support::random_spd(gen);
    const Positions z = test_support::random_positions(gen, 1 + trial % 5);
    const ObservationMatrix H = build_observation_matrix(z);
    const double r = 0.5 + trial % 3;
    const FilterState post =
        kalman_update(s, H, Eigen::VectorXd::Zero(H.rows()), r);
    const ParamCov reference = joseph(s.cov, H, r);
    EXPECT_LT((post.cov - reference).norm() / reference.norm(), 1e-8);
  }
}

TEST(BatchOracle, EmptyObservationReturnsPrior) {
  FlowParameters m;
  m << 1, -1, 0.5, 0, 0, 2;
  const ParamCov P = 3.0 * ParamCov::Identity();
  const GaussianPosterior post =
      batch_posterior_oracle(m, P, ObservationMatrix(0, 6), Eigen::VectorXd(0), 1.0);
  EXPECT_TRUE(post.mean.isApprox(m));
  EXPECT_TRUE(post.cov.isApprox(P));
}

TEST(BatchOracle, SingularPriorThrows) {
  ParamCov P = ParamCov::Identity();
  P(3, 3) = 0.0;
  EXPECT_THROW(batch_posterior_oracle(FlowParameters::Zero(), P,
                                      ObservationMatrix(0, 6), Eigen::VectorXd(0), 1.0),
               SingularPriorError);
}

TEST(BatchOracle, SingleObservationMatchesGainForm) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    FilterState s;
    s.cov = test_support::random_spd(gen);
    for (int i = 0; i < 6; ++i) s.mean(i) = normal(gen);
    const Positions z = test_support::random_positions(gen, 2);
    const ObservationMatrix H = build_observation_matrix(z);
    Eigen::VectorXd y(4);
    for (int i = 0; i < 4; ++i) y(i) = normal(gen);
    const FilterState gain = kalman_update(s, H, y, 0.7);
    const GaussianPosterior info = batch_posterior_oracle(s.mean, s.cov, H, y, 0.7);
    EXPECT_LT((gain.mean - info.mean).norm(), 1e-8 * (1 + info.mean.norm()));
    EXPECT_LT((gain.cov - info.cov).norm(), 1e-8 * info.cov.norm());
  }
}

TEST(BatchOracle, SequentialEqualsBatchOverHundredObservations) {
  for (FlowCase c : kAllFlowCases) {
    const auto truth = LinearFlowField::from_case(c);
    CounterRng noise(17, 1);
    std::mt19937_64 gen(23);
    FilterState s = FilterState::prior(1e6);
    ObservationMatrix all_H(0, 6);
    Eigen::VectorXd all_y(0);
    for (int i = 0; i < 100; ++i) {
      const Positions z = test_support::random_positions(gen, 2, 1.5);
      const ObservationMatrix H = build_observation_matrix(z);
      const Eigen::VectorXd y = observe(truth, z, 1.0, noise);
      s = kalman_update(s, H, y, 1.0);
      all_H.conservativeResize(all_H.rows() + H.rows(), Eigen::NoChange);
      all_H.bottomRows(H.rows()) = H;
      all_y.conservativeResize(all_y.size() + y.size());
      all_y.tail(y.size()) = y;
    }
    const GaussianPosterior batch = batch_posterior_oracle(
        FlowParameters::Zero(), 1e6 * ParamCov::Identity(), all_H, all_y, 1.0);
    EXPECT_LT((s.mean - batch.mean).norm() / batch.mean.norm(), 1e-6) << to_string(c);
    EXPECT_LT((s.cov - batch.cov).cwiseAbs().maxCoeff(), 1e-6 * batch.cov.trace());
    EXPECT_EQ(s.obs_count, 100);
  }
}

TEST(KalmanUpdate, CovarianceStaysSymmetricPsdAndTraceNonIncreasing) {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal;
  FilterState s = FilterState::prior(1e6);
  double previous = s.trace();
  for (int i = 0; i < 10000; ++i) {
    const Positions z = test_support::random_positions(gen, 1 + i % 4, 3.0);
    const ObservationMatrix H = build_observation_matrix(z);
    Eigen::VectorXd y(H.rows());
    for (int j = 0; j < y.size(); ++j) y(j) = normal(gen);
    s = kalman_update(s, H, y, 1.0);
    ASSERT_LE((s.cov - s.cov.transpose()).norm(), 1e-10 * s.cov.norm());
    ASSERT_GE(min_eigenvalue(s.cov), -1e-8 * s.trace()) << i;
    ASSERT_LE(s.trace(), previous) << i;
    previous = s.trace();
  }
}

TEST(Gamma, IsotropicClosedForm) {
  for (double s2 : {0.5, 1.0, 1e3}) {
    for (double r : {0.25, 1.0}) {
      const Isotropic oracle{s2, r};
      for (const Vec2& z : {Vec2(0, 0), Vec2(1, 0), Vec2(-0.3, 2.5), Vec2(4, 4)}) {
        const Vec2 zs[] = {z};
        EXPECT_NEAR(gamma(isotropic_state(s2), zs, r), oracle.value(z),
                    1e-10 * oracle.value(z));
      }
    }
  }
}

TEST(Gamma, EqualsPosteriorTraceForAnyData) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> normal;
  FilterState s;
  s.cov = test_support::random_spd(gen);
  const Positions z = test_support::random_positions(gen, 3);
  const ObservationMatrix H = build_observation_matrix(z);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y(i) = 100 * normal(gen);
    EXPECT_NEAR(gamma(s, z, 0.9), kalman_update(s, H, y, 0.9).trace(), 1e-12);
  }
}

TEST(Gamma, StrictlyBelowPriorTrace) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    FilterState s;
    s.cov = test_support::random_spd(gen, 1e-3, 1e3);
    const Positions z = test_support::random_positions(gen, 1 + trial % 6);
    EXPECT_LT(gamma(s, z, 1.0), s.trace());
  }
}

TEST(GammaGradient, VanishesAtOriginForIsotropicPrior) {
  const Vec2 z[] = {Vec2::Zero()};
  EXPECT_LT(gamma_gradient(isotropic_state(2.0), z, 1.0).norm(), 1e-15);
}

TEST(GammaGradient, PointsInwardForIsotropicPrior) {
  const Isotropic oracle{2.0, 1.0};
  for (const Vec2& p : {Vec2(1, 0), Vec2(0.3, -0.4), Vec2(-2, 1)}) {
    const Vec2 z[] = {p};
    const Eigen::VectorXd g = gamma_gradient(isotropic_state(2.0), z, 1.0);
    EXPECT_LT(g.dot(p), 0.0);
    EXPECT_LT((Vec2(g) - oracle.gradient(p)).norm(), 1e-12);
    EXPECT_LT(std::abs(g(0) * p.y() - g(1) * p.x()), 1e-12);
  }
}

TEST(GammaGradient, MatchesFiniteDifferences) {
  std::mt19937_64 gen(21);
  const int sizes[] = {1, 2, 5};
  for (int trial = 0; trial < 100; ++trial) {
    FilterState s;
    s.cov = test_support::random_spd(gen);
    const Positions z = test_support::random_positions(gen, sizes[trial % 3]);
    const Eigen::VectorXd analytic = gamma_gradient(s, z, 1.0);
    const Eigen::VectorXd fd = gamma_gradient_fd(s, z, 1.0, 1e-5);
    EXPECT_LT(test_support::relative_error(analytic, fd), 1e-5) << trial;
  }
}

TEST(GammaHessian, ZeroCovarianceIsFlat) {
  const Positions z{{1.0, 2.0}, {-1.0, 0.5}};
  EXPECT_EQ(gamma_hessian_norm(FilterState{}, z, 1.0), 0.0);
}

TEST(GammaHessian, QuadraticObjectiveHasIdentityHessian) {
  for (int k : {1, 2, 5}) {
    Positions z;
    for (int i = 0; i < k; ++i) z.emplace_back(0.3 * i, -0.2 * i);
    EXPECT_NEAR(hessian_frobenius_norm(QuadraticObjective{}, z), std::sqrt(2.0 * k),
                1e-8);
  }
}

TEST(GammaHessian, MatchesSymbolicSecondDerivative) {
  for (double s2 : {0.5, 1.0, 3.0}) {
    const Isotropic oracle{s2, 1.0};
    for (const Vec2& p : {Vec2(0, 0), Vec2(0.7, -0.2)}) {
      const Vec2 z[] = {p};
      const double expected = oracle.hessian(p).norm();
      EXPECT_NEAR(gamma_hessian_norm(isotropic_state(s2), z, 1.0), expected,
                  1e-4 * expected);
    }
  }
}

TEST(Metrics, RmsAndMinEigenvalue) {
  const auto truth = LinearFlowField::from_case(FlowCase::center);
  FilterState s;
  s.mean = pack(truth);
  EXPECT_EQ(rms_error(s, truth), 0.0);
  s.mean(0) += std::sqrt(6.0);
  EXPECT_NEAR(rms_error(s, truth), 1.0, 1e-15);
  ParamCov P = ParamCov::Identity();
  P(4, 4) = -0.25;
  EXPECT_DOUBLE_EQ(min_eigenvalue(P), -0.25);
}

TEST(Objectives, TraceReductionSignAndModes) {
  std::mt19937_64 gen(8);
  const ParamCov P = test_support::random_spd(gen);
  const Positions z = test_support::random_positions(gen, 3);
  FilterState s;
  s.cov = P;
  const TraceReductionObjective analytic(P, 1.0);
  const TraceReductionObjective fd(P, 1.0, GradientMode::finite_difference);
  EXPECT_NEAR(analytic.value(z), P.trace() - gamma(s, z, 1.0), 1e-12);
  EXPECT_LT(test_support::relative_error(analytic.gradient(z), -gamma_gradient(s, z, 1.0)),
            1e-14);
  EXPECT_LT(test_support::relative_error(fd.gradient(z), analytic.gradient(z)), 1e-6);
}

}  // namespace
