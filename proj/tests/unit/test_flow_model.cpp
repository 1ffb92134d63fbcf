#include <cmath>

#include <gtest/gtest.h>

#include "glider_assim/flow_model.hpp"
#include "test_helpers.hpp"

using namespace glider_assim;

namespace {

const Vec2 kV0(0.5, -0.5);

TEST(FlowModel, CasesHaveExpectedParameters) {
  for (FlowCase c : kAllFlowCases) {
    EXPECT_EQ(LinearFlowField::from_case(c).v0, kV0) << to_string(c);
  }
  Mat2 center;
  center << 0, 1, -1, 0;
  EXPECT_EQ(LinearFlowField::from_case(FlowCase::center).A, center);
  EXPECT_EQ(LinearFlowField::from_case(FlowCase::unstable_node).A, Mat2::Identity());
  EXPECT_EQ(LinearFlowField::from_case(FlowCase::saddle).A,
            Mat2(Eigen::Vector2d(1, -1).asDiagonal()));
  EXPECT_EQ(LinearFlowField::from_case(FlowCase::stable_node).A, -Mat2::Identity());
}

TEST(FlowModel, CaseTagsRoundTrip) {
  for (FlowCase c : kAllFlowCases) EXPECT_EQ(parse_flow_case(to_string(c)), c);
  EXPECT_EQ(to_string(FlowCase::unstable_node), "unstable-node");
  EXPECT_FALSE(parse_flow_case("gyre").has_value());
}

TEST(FlowModel, VelocityExamples) {
  const auto center = LinearFlowField::from_case(FlowCase::center);
  EXPECT_TRUE(velocity(center, Vec2(-0.5, -0.5)).isZero(0.0));

  LinearFlowField constant;
  constant.v0 = kV0;
  EXPECT_EQ(velocity(constant, Vec2(3.0, -7.0)), kV0);

  const auto node = LinearFlowField::from_case(FlowCase::unstable_node);
  EXPECT_EQ(velocity(node, Vec2::Zero()), kV0);
  EXPECT_EQ(node.jacobian(), node.A);
}

TEST(FlowModel, FixedPoints) {
  EXPECT_TRUE(fixed_point(LinearFlowField::from_case(FlowCase::unstable_node))
                  .isApprox(Vec2(-0.5, 0.5)));
  EXPECT_TRUE(fixed_point(LinearFlowField::from_case(FlowCase::stable_node))
                  .isApprox(Vec2(0.5, -0.5)));
  EXPECT_TRUE(fixed_point(LinearFlowField::from_case(FlowCase::saddle))
                  .isApprox(Vec2(-0.5, -0.5)));
  EXPECT_TRUE(fixed_point(LinearFlowField::from_case(FlowCase::center))
                  .isApprox(Vec2(-0.5, -0.5)));
  for (FlowCase c : kAllFlowCases) {
    const auto f = LinearFlowField::from_case(c);
    EXPECT_LT(velocity(f, fixed_point(f)).norm(), 1e-15) << to_string(c);
  }
}

TEST(FlowModel, SingularJacobianThrows) {
  LinearFlowField f;
  f.v0 = kV0;
  EXPECT_THROW(fixed_point(f), SingularJacobianError);
  f.A << 1, 2, 2, 4;
  EXPECT_THROW(fixed_point(f), SingularJacobianError);
}

TEST(FlowModel, ZeroJacobianDriftsInStraightLine) {
  LinearFlowField f;
  f.v0 = kV0;
  const Vec2 z0(1.0, 2.0);
  for (double t : {0.0, 0.1, 1.0, 7.5}) {
    EXPECT_LT((analytic_uncontrolled_path(f, z0, t) - (z0 + t * kV0)).norm(), 1e-14);
  }
}

TEST(FlowModel, StableNodeDecaysExponentially) {
  const auto f = LinearFlowField::from_case(FlowCase::stable_node);
  const Vec2 zs = fixed_point(f);
  for (double t : {0.1, 1.0, 5.0, 10.0}) {
    const Vec2 expected = zs + std::exp(-t) * Vec2(1.0, 0.0);
    EXPECT_LT((analytic_uncontrolled_path(f, zs + Vec2(1.0, 0.0), t) - expected).norm(),
              1e-14);
  }
}

TEST(FlowModel, CenterPreservesDistanceToFixedPoint) {
  const auto f = LinearFlowField::from_case(FlowCase::center);
  const Vec2 zs = fixed_point(f);
  const Vec2 z0(1.3, -0.2);
  const double r0 = (z0 - zs).norm();
  for (int i = 0; i <= 1000; ++i) {
    const double t = 0.01 * i;
    const double r = (analytic_uncontrolled_path(f, z0, t) - zs).norm();
    EXPECT_LT(std::abs(r - r0) / r0, 1e-10) << "t=" << t;
  }
}

TEST(FlowModel, AgreesWithFineStepIntegration) {
  const Vec2 z0(0.3, -0.7);
  for (FlowCase c : kAllFlowCases) {
    const auto f = LinearFlowField::from_case(c);
    for (double t : {0.5, 2.0, 10.0}) {
      const Vec2 exact = analytic_uncontrolled_path(f, z0, t);
      const Vec2 reference = test_support::rk4_long_double(f, z0, t, 1e-4);
      EXPECT_LT((exact - reference).norm(), 1e-8) << to_string(c) << " t=" << t;
    }
  }
}

TEST(FlowModel, DefectiveAndNearlyRepeatedEigenvalues) {
  const Vec2 z0(-0.4, 0.9);
  LinearFlowField jordan;
  jordan.v0 = Vec2(0.2, 0.1);
  jordan.A << -0.5, 1.0, 0.0, -0.5;
  LinearFlowField close = jordan;
  close.A(1, 1) = -0.5 + 1e-9;
  LinearFlowField spiral;
  spiral.v0 = Vec2(-0.3, 0.4);
  spiral.A << 0.1, -2.0, 1.5, -0.3;
  for (const auto& f : {jordan, close, spiral}) {
    for (double t : {0.1, 1.0, 4.0}) {
      EXPECT_LT((analytic_uncontrolled_path(f, z0, t) -
                 test_support::rk4_long_double(f, z0, t, 1e-4))
                    .norm(),
                1e-9);
    }
  }
}

TEST(FlowModel, FlowMapComposes) {
  const auto f = LinearFlowField::from_case(FlowCase::saddle);
  const Vec2 z0(0.7, 0.2);
  const Vec2 once = flow_map(f, 0.7).apply(z0);
  const Vec2 twice = flow_map(f, 0.4).apply(flow_map(f, 0.3).apply(z0));
  EXPECT_LT((once - twice).norm(), 1e-13);
  EXPECT_EQ(analytic_uncontrolled_path(f, z0, 0.0), z0);
}

}  // namespace
