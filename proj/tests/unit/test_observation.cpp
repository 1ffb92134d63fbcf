#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "glider_assim/observation.hpp"
#include "glider_assim/random.hpp"
#include "test_helpers.hpp"

using namespace glider_assim;

namespace {

TEST(ObservationMatrix, OriginZeroesJacobianColumns) {
  const Vec2 z[] = {Vec2(0.0, 0.0)};
  const ObservationMatrix H = build_observation_matrix(z);
  ObservationMatrix expected(2, 6);
  expected << 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0;
  EXPECT_EQ(H, expected);
}

TEST(ObservationMatrix, RowPattern) {
  const Vec2 z[] = {Vec2(2.0, 3.0)};
  ObservationMatrix expected(2, 6);
  expected << 1, 0, 2, 3, 0, 0, 0, 1, 0, 0, 2, 3;
  EXPECT_EQ(build_observation_matrix(z), expected);
}

TEST(ObservationMatrix, EmptyCohortThrows) {
  EXPECT_THROW(build_observation_matrix(Positions{}), EmptyCohortError);
}

TEST(ObservationMatrix, ReproducesFieldVelocities) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    FlowParameters theta;
    for (int i = 0; i < 6; ++i) theta(i) = normal(gen);
    const int count = 1 + trial % 10;
    const Positions z = test_support::random_positions(gen, count, 5.0);
    const ObservationMatrix H = build_observation_matrix(z);
    ASSERT_EQ(H.rows(), 2 * count);
    const Eigen::VectorXd predicted = H * theta;
    const Eigen::VectorXd direct = stacked_velocities(unpack(theta), z);
    for (int k = 0; k < count; ++k) {
      EXPECT_EQ(direct.segment<2>(2 * k), velocity(unpack(theta), z[k]));
    }
    EXPECT_LT((predicted - direct).cwiseAbs().maxCoeff(), 1e-14 * (1 + direct.norm()));
  }
}

TEST(ObservationMatrix, PackUnpackRoundTrip) {
  for (FlowCase c : kAllFlowCases) {
    const auto f = LinearFlowField::from_case(c);
    EXPECT_EQ(unpack(pack(f)), f);
  }
  FlowParameters theta;
  theta << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(pack(unpack(theta)), theta);
  EXPECT_EQ(unpack(theta).A(0, 1), 4);
  EXPECT_EQ(unpack(theta).A(1, 0), 5);
}

TEST(Observe, NoiselessIsExact) {
  const auto f = LinearFlowField::from_case(FlowCase::saddle);
  const Positions z{{0.3, 0.4}, {-1.0, 2.0}};
  CounterRng rng(1);
  EXPECT_EQ(observe(f, z, 0.0, rng), stacked_velocities(f, z));
  EXPECT_EQ(rng.counter(), 0u);
}

TEST(Observe, NegativeVarianceThrows) {
  CounterRng rng(1);
  const Positions z{{0.0, 0.0}};
  EXPECT_THROW(observe(LinearFlowField{}, z, -1.0, rng), std::invalid_argument);
}

TEST(Observe, SeededDrawsRepeat) {
  const auto f = LinearFlowField::from_case(FlowCase::center);
  const Positions z{{1.0, 0.0}, {0.0, 1.0}};
  CounterRng a(42, 1);
  CounterRng b(42, 1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(observe(f, z, 1.0, a), observe(f, z, 1.0, b));
  CounterRng c(43, 1);
  EXPECT_NE(observe(f, z, 1.0, a), observe(f, z, 1.0, c));
}

TEST(Observe, SampleMeanAndCorrelation) {
  const auto f = LinearFlowField::from_case(FlowCase::unstable_node);
  const Positions z{{0.25, -0.75}};
  const Vec2 truth = velocity(f, z[0]);
  CounterRng rng(2024, 1);
  constexpr int n = 100000;
  Vec2 sum = Vec2::Zero();
  double sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 e = observe(f, z, 1.0, rng) - truth;
    sum += e;
    sxx += e.x() * e.x();
    syy += e.y() * e.y();
    sxy += e.x() * e.y();
  }
  const Vec2 mean = sum / n;
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 5.0 / std::sqrt(double(n)));
  EXPECT_NEAR(sxx / n, 1.0, 0.02);
  EXPECT_NEAR(syy / n, 1.0, 0.02);
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.02);
}

TEST(CounterRng, StreamsAreIndependentAndReproducible) {
  CounterRng a = make_stream(5, RngStream::observation_noise);
  CounterRng b = make_stream(5, RngStream::strategy);
  CounterRng a2 = make_stream(5, RngStream::observation_noise);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    equal += x == b();
    EXPECT_EQ(x, a2());
  }
  EXPECT_EQ(equal, 0);
  EXPECT_EQ(a.counter(), 1000u);
  const CounterRng s = a.substream(9);
  EXPECT_EQ(a.counter(), 1000u);
  EXPECT_EQ(CounterRng(s)(), a.substream(9)());
}

TEST(CounterRng, DrawingFromOneStreamLeavesOthersUntouched) {
  CounterRng noise = make_stream(3, RngStream::observation_noise);
  CounterRng strategy = make_stream(3, RngStream::strategy);
  for (int i = 0; i < 57; ++i) strategy();
  CounterRng fresh = make_stream(3, RngStream::observation_noise);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(noise(), fresh());
}

TEST(CounterRng, BitsLookUniform) {
  CounterRng rng(11);
  constexpr int n = 200000;
  int ones[64] = {};
  for (int i = 0; i < n; ++i) {
    const auto x = rng();
    for (int b = 0; b < 64; ++b) ones[b] += (x >> b) & 1u;
  }
  for (int b = 0; b < 64; ++b) EXPECT_NEAR(double(ones[b]) / n, 0.5, 0.006) << b;
}

}  // namespace
