#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

namespace glider_assim {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// The four reference flows: linear fields about a hyperbolic fixed point.
enum class FlowCase { center, unstable_node, saddle, stable_node };

inline constexpr std::array<FlowCase, 4> kAllFlowCases = {
    FlowCase::center, FlowCase::unstable_node, FlowCase::saddle,
    FlowCase::stable_node};

std::string_view to_string(FlowCase flow);
std::optional<FlowCase> parse_flow_case(std::string_view tag);

class SingularJacobianError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Stationary affine velocity field v(z) = v0 + A z.
struct LinearFlowField {
  Vec2 v0 = Vec2::Zero();
  Mat2 A = Mat2::Zero();

  static LinearFlowField from_case(FlowCase flow);

  Vec2 velocity(const Vec2& z) const { return v0 + A * z; }
  const Mat2& jacobian() const { return A; }

  bool operator==(const LinearFlowField& other) const {
    return v0 == other.v0 && A == other.A;
  }
};

inline Vec2 velocity(const LinearFlowField& field, const Vec2& z) {
  return field.velocity(z);
}

/// Zero of the field, -A^{-1} v0. Throws SingularJacobianError when A is
/// numerically singular.
Vec2 fixed_point(const LinearFlowField& field);

/// Exact time-t flow map of z' = v0 + A z, written as z(t) = Phi z0 + offset.
struct AffinePropagator {
  Mat2 transition = Mat2::Identity();
  Vec2 offset = Vec2::Zero();

  Vec2 apply(const Vec2& z0) const { return transition * z0 + offset; }
};

AffinePropagator flow_map(const LinearFlowField& field, double t);

/// Position at time t of an uncontrolled particle released at z0.
Vec2 analytic_uncontrolled_path(const LinearFlowField& field, const Vec2& z0,
                                double t);

}  // namespace glider_assim
