#include "glider_assim/observation.hpp"

#include <cmath>
#include <random>

namespace glider_assim {

FlowParameters pack(const LinearFlowField& field) {
  FlowParameters theta;
  theta << field.v0.x(), field.v0.y(), field.A(0, 0), field.A(0, 1),
      field.A(1, 0), field.A(1, 1);
  return theta;
}

LinearFlowField unpack(const FlowParameters& theta) {
  LinearFlowField field;
  field.v0 = Vec2(theta(0), theta(1));
  field.A << theta(2), theta(3), theta(4), theta(5);
  return field;
}

void fill_observation_matrix(std::span<const Vec2> positions,
                             ObservationMatrix& out) {
  const auto rows = static_cast<Eigen::Index>(2 * positions.size());
  if (out.rows() != rows) out.resize(rows, kStateDim);
  out.setZero();
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(2 * k);
    const Vec2& z = positions[k];
    out(r, 0) = 1.0;
    out(r, 2) = z.x();
    out(r, 3) = z.y();
    out(r + 1, 1) = 1.0;
    out(r + 1, 4) = z.x();
    out(r + 1, 5) = z.y();
  }
}

ObservationMatrix build_observation_matrix(std::span<const Vec2> positions) {
  if (positions.empty()) {
    throw EmptyCohortError("build_observation_matrix: cohort has no gliders");
  }
  ObservationMatrix H(2 * positions.size(), kStateDim);
  fill_observation_matrix(positions, H);
  return H;
}

Eigen::VectorXd stacked_velocities(const LinearFlowField& field,
                                   std::span<const Vec2> positions) {
  Eigen::VectorXd out(2 * positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    out.segment<2>(static_cast<Eigen::Index>(2 * k)) =
        field.velocity(positions[k]);
  }
  return out;
}

Eigen::VectorXd observe(const LinearFlowField& truth,
                        std::span<const Vec2> positions, double noise_var,
                        CounterRng& rng) {
  if (noise_var < 0.0) {
    throw std::invalid_argument("observe: noise variance must be >= 0");
  }
  Eigen::VectorXd y = stacked_velocities(truth, positions);
  if (noise_var == 0.0) return y;
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) += noise(rng);
  }
  return y;
}

}  // namespace glider_assim
