#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "glider_assim/flow_model.hpp"
#include "glider_assim/random.hpp"

namespace glider_assim {

inline constexpr int kStateDim = 6;

/// Flow parameters ordered (v0x, v0y, A11, A12, A21, A22).
using FlowParameters = Eigen::Matrix<double, kStateDim, 1>;

/// 2K x 6 map from flow parameters to stacked glider velocities.
using ObservationMatrix = Eigen::Matrix<double, Eigen::Dynamic, kStateDim>;

using Positions = std::vector<Vec2>;

class EmptyCohortError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

FlowParameters pack(const LinearFlowField& field);
LinearFlowField unpack(const FlowParameters& theta);

/// Rows 2k and 2k+1 are [1, 0, x_k, y_k, 0, 0] and [0, 1, 0, 0, x_k, y_k].
ObservationMatrix build_observation_matrix(std::span<const Vec2> positions);

/// Writes the matrix into a preallocated 2K x 6 buffer.
void fill_observation_matrix(std::span<const Vec2> positions,
                             ObservationMatrix& out);

Eigen::VectorXd stacked_velocities(const LinearFlowField& field,
                                   std::span<const Vec2> positions);

/// Stacked true velocities plus i.i.d. N(0, noise_var) per component.
Eigen::VectorXd observe(const LinearFlowField& truth,
                        std::span<const Vec2> positions, double noise_var,
                        CounterRng& rng);

}  // namespace glider_assim
