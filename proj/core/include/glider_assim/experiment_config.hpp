#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "glider_assim/control_solver.hpp"
#include "glider_assim/flow_model.hpp"
#include "glider_assim/observation.hpp"

namespace glider_assim {

enum class StrategyKind { optimal, none, random };

inline constexpr std::array<StrategyKind, 3> kAllStrategies = {
    StrategyKind::optimal, StrategyKind::none, StrategyKind::random};

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view tag);

std::string_view to_string(PathInit init);
std::optional<PathInit> parse_path_init(std::string_view tag);

std::string_view to_string(GradientMode mode);
std::optional<GradientMode> parse_gradient_mode(std::string_view tag);

enum class PlacementKind { circle, list };

/// Initial glider positions: K points evenly spaced on a circle (glider k at
/// angle 2 pi k / K), or an explicit list. Optional Gaussian jitter is drawn
/// from the placement stream.
struct PlacementSpec {
  PlacementKind kind = PlacementKind::circle;
  double radius = 1.0;
  Vec2 center = Vec2::Zero();
  Positions positions;
  double jitter = 0.0;

  bool operator==(const PlacementSpec&) const = default;
};

struct ExperimentConfig {
  FlowCase flow = FlowCase::center;
  int gliders = 1;
  StrategyKind strategy = StrategyKind::optimal;
  int n_obs = 100;
  double dt = 0.1;
  double u_max = 1.0;
  double noise_var = 1.0;
  double prior_var = 1e6;
  std::uint64_t seed = 0;
  SolverSettings solver = default_solver_settings();
  PlacementSpec placement;
  std::string out_dir;
  bool debug_solver = false;

  /// Solver defaults used by experiments (path initialization follows the
  /// estimated flow; see README).
  static SolverSettings default_solver_settings();

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

bool operator==(const SolverSettings& a, const SolverSettings& b);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Flat JSON object with one key per field.
std::string to_json(const ExperimentConfig& config);

/// Overlays the keys present in `text` on `base`. Unknown keys, type
/// mismatches and syntax errors raise ConfigError (syntax errors carry the
/// line number).
ExperimentConfig config_from_json(std::string_view text,
                                  const ExperimentConfig& base = {});

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const ExperimentConfig& base = {});

/// Applies one flat key (as it would appear in JSON) given as text, e.g.
/// from an environment variable. Throws ConfigError.
void apply_config_value(ExperimentConfig& config, std::string_view key,
                        std::string_view value);

/// Every flat key accepted by config_from_json, in serialization order.
std::vector<std::string> config_keys();

Positions initial_positions(const ExperimentConfig& config);

}  // namespace glider_assim
