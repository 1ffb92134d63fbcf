#include "glider_assim/flow_model.hpp"

#include <cmath>
#include <complex>
#include <limits>

namespace glider_assim {
namespace {

using Complex = std::complex<double>;

// Eigenvalues closer than this (relative to ||A||) use the series path.
constexpr double kCoincidentEigenvalueTol = 1e-6;

Complex exp_fn(Complex lambda, double t) { return std::exp(lambda * t); }

// (e^{lambda t} - 1) / lambda, continuous through lambda = 0.
Complex phi1_fn(Complex lambda, double t) {
  const Complex x = lambda * t;
  if (std::abs(x) < 1e-3) {
    Complex term = t;
    Complex sum = term;
    for (int n = 1; n < 8; ++n) {
      term *= x / static_cast<double>(n + 1);
      sum += term;
    }
    return sum;
  }
  return (std::exp(x) - 1.0) / lambda;
}

// Scaling-and-squaring Taylor exponential of the augmented generator
// [[A t, v0 t], [0, 0]].
AffinePropagator series_flow_map(const LinearFlowField& field, double t) {
  Eigen::Matrix3d generator = Eigen::Matrix3d::Zero();
  generator.topLeftCorner<2, 2>() = field.A * t;
  generator.topRightCorner<2, 1>() = field.v0 * t;

  const double norm = generator.lpNorm<Eigen::Infinity>();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Eigen::Matrix3d scaled = generator / std::ldexp(1.0, squarings);

  Eigen::Matrix3d result = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d term = Eigen::Matrix3d::Identity();
  for (int n = 1; n <= 18; ++n) {
    term = term * scaled / static_cast<double>(n);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }

  AffinePropagator out;
  out.transition = result.topLeftCorner<2, 2>();
  out.offset = result.topRightCorner<2, 1>();
  return out;
}

}  // namespace

std::string_view to_string(FlowCase flow) {
  switch (flow) {
    case FlowCase::center:
      return "center";
    case FlowCase::unstable_node:
      return "unstable-node";
    case FlowCase::saddle:
      return "saddle";
    case FlowCase::stable_node:
      return "stable-node";
  }
  return "unknown";
}

std::optional<FlowCase> parse_flow_case(std::string_view tag) {
  for (FlowCase flow : kAllFlowCases) {
    if (to_string(flow) == tag) return flow;
  }
  return std::nullopt;
}

LinearFlowField LinearFlowField::from_case(FlowCase flow) {
  LinearFlowField field;
  field.v0 = Vec2(0.5, -0.5);
  switch (flow) {
    case FlowCase::center:
      field.A << 0.0, 1.0, -1.0, 0.0;
      break;
    case FlowCase::unstable_node:
      field.A << 1.0, 0.0, 0.0, 1.0;
      break;
    case FlowCase::saddle:
      field.A << 1.0, 0.0, 0.0, -1.0;
      break;
    case FlowCase::stable_node:
      field.A << -1.0, 0.0, 0.0, -1.0;
      break;
  }
  return field;
}

Vec2 fixed_point(const LinearFlowField& field) {
  const double det = field.A.determinant();
  const double scale = std::max(field.A.squaredNorm(), 1e-300);
  if (std::abs(det) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
    throw SingularJacobianError("fixed_point: flow Jacobian is singular");
  }
  return -field.A.partialPivLu().solve(field.v0);
}

AffinePropagator flow_map(const LinearFlowField& field, double t) {
  const Mat2& A = field.A;
  const double a_norm = A.norm();
  const double mu = 0.5 * A.trace();
  const double q = mu * mu - A.determinant();
  const Complex s = std::sqrt(Complex(q, 0.0));

  // |lambda1 - lambda2| = 2|s|; includes A = 0.
  if (a_norm == 0.0 || 2.0 * std::abs(s) < kCoincidentEigenvalueTol * a_norm) {
    return series_flow_map(field, t);
  }

  // f(A) = c0 I + c1 (A - mu I) for any analytic f (Sylvester, 2x2 form).
  const Complex l1 = mu + s;
  const Complex l2 = mu - s;
  const Mat2 shifted = A - mu * Mat2::Identity();

  const Complex e0 = 0.5 * (exp_fn(l1, t) + exp_fn(l2, t));
  const Complex e1 = (exp_fn(l1, t) - exp_fn(l2, t)) / (2.0 * s);
  const Complex p0 = 0.5 * (phi1_fn(l1, t) + phi1_fn(l2, t));
  const Complex p1 = (phi1_fn(l1, t) - phi1_fn(l2, t)) / (2.0 * s);

  AffinePropagator out;
  out.transition = e0.real() * Mat2::Identity() + e1.real() * shifted;
  const Mat2 integral = p0.real() * Mat2::Identity() + p1.real() * shifted;
  out.offset = integral * field.v0;
  return out;
}

Vec2 analytic_uncontrolled_path(const LinearFlowField& field, const Vec2& z0,
                                double t) {
  return flow_map(field, t).apply(z0);
}

}  // namespace glider_assim
