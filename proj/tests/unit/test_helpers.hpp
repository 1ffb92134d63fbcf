#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "glider_assim/assimilation.hpp"
#include "glider_assim/flow_model.hpp"

namespace glider_assim::test_support {

/// Fixed-step classical RK4 in long double for z' = v0 + A z.
inline Vec2 rk4_long_double(const LinearFlowField& f, const Vec2& z0, double t,
                            double step) {
  using V = Eigen::Matrix<long double, 2, 1>;
  using M = Eigen::Matrix<long double, 2, 2>;
  const V v0 = f.v0.cast<long double>();
  const M A = f.A.cast<long double>();
  auto rhs = [&](const V& z) -> V { return v0 + A * z; };
  const long n = std::lround(t / step);
  const long double h = static_cast<long double>(t) / n;
  V z = z0.cast<long double>();
  for (long i = 0; i < n; ++i) {
    const V k1 = rhs(z);
    const V k2 = rhs(z + 0.5L * h * k1);
    const V k3 = rhs(z + 0.5L * h * k2);
    const V k4 = rhs(z + h * k3);
    z += (h / 6.0L) * (k1 + 2.0L * k2 + 2.0L * k3 + k4);
  }
  return z.cast<double>();
}

/// Well-conditioned random SPD 6x6 matrix with eigenvalues in [lo, hi].
inline ParamCov random_spd(std::mt19937_64& gen, double lo = 0.1,
                           double hi = 10.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(lo, hi);
  ParamCov X;
  for (int i = 0; i < X.size(); ++i) X.data()[i] = normal(gen);
  Eigen::HouseholderQR<ParamCov> qr(X);
  const ParamCov Q = qr.householderQ();
  Eigen::Matrix<double, 6, 1> d;
  for (int i = 0; i < 6; ++i) d(i) = uniform(gen);
  ParamCov P = Q * d.asDiagonal() * Q.transpose();
  return 0.5 * (P + P.transpose());
}

inline Positions random_positions(std::mt19937_64& gen, int count,
                                  double scale = 2.0) {
  std::uniform_real_distribution<double> uniform(-scale, scale);
  Positions z;
  for (int k = 0; k < count; ++k) z.emplace_back(uniform(gen), uniform(gen));
  return z;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace glider_assim::test_support
