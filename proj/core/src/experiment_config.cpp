#include "glider_assim/experiment_config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace glider_assim {
namespace {

using nlohmann::json;

template <typename Enum, std::size_t N>
std::optional<Enum> parse_tag(std::string_view tag,
                              const std::array<Enum, N>& values) {
  for (Enum value : values) {
    if (to_string(value) == tag) return value;
  }
  return std::nullopt;
}

constexpr std::array<PathInit, 3> kPathInits = {
    PathInit::uniform, PathInit::straight_line, PathInit::advected};
constexpr std::array<GradientMode, 2> kGradientModes = {
    GradientMode::analytic, GradientMode::finite_difference};

double get_double(const json& value, const std::string& key) {
  if (!value.is_number()) throw ConfigError(key, "expected a number");
  return value.get<double>();
}

long get_integer(const json& value, const std::string& key) {
  if (!value.is_number_integer()) throw ConfigError(key, "expected an integer");
  return value.get<long>();
}

bool get_bool(const json& value, const std::string& key) {
  if (!value.is_boolean()) throw ConfigError(key, "expected true or false");
  return value.get<bool>();
}

std::string get_string(const json& value, const std::string& key) {
  if (!value.is_string()) throw ConfigError(key, "expected a string");
  return value.get<std::string>();
}

Vec2 get_vec2(const json& value, const std::string& key) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
      !value[1].is_number()) {
    throw ConfigError(key, "expected [x, y]");
  }
  return Vec2(value[0].get<double>(), value[1].get<double>());
}

template <typename Enum>
Enum get_enum(const json& value, const std::string& key,
              std::optional<Enum> (*parse)(std::string_view)) {
  const std::string tag = get_string(value, key);
  const std::optional<Enum> parsed = parse(tag);
  if (!parsed) throw ConfigError(key, "unrecognized value '" + tag + "'");
  return *parsed;
}

void apply_key(ExperimentConfig& c, const std::string& key, const json& v) {
  SolverSettings& s = c.solver;
  if (key == "flow") {
    c.flow = get_enum<FlowCase>(v, key, &parse_flow_case);
  } else if (key == "gliders") {
    c.gliders = static_cast<int>(get_integer(v, key));
  } else if (key == "strategy") {
    c.strategy = get_enum<StrategyKind>(v, key, &parse_strategy);
  } else if (key == "n_obs") {
    c.n_obs = static_cast<int>(get_integer(v, key));
  } else if (key == "dt") {
    c.dt = get_double(v, key);
  } else if (key == "u_max") {
    c.u_max = get_double(v, key);
  } else if (key == "noise_var") {
    c.noise_var = get_double(v, key);
  } else if (key == "prior_var") {
    c.prior_var = get_double(v, key);
  } else if (key == "seed") {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0 &&
                                   !v.is_number_unsigned())) {
      throw ConfigError(key, "expected a non-negative integer");
    }
    c.seed = v.get<std::uint64_t>();
  } else if (key == "interior_points") {
    s.interior_points = static_cast<int>(get_integer(v, key));
  } else if (key == "dtau") {
    s.dtau = get_double(v, key);
  } else if (key == "adaptive_dtau") {
    s.adaptive_dtau = get_bool(v, key);
  } else if (key == "residual_tol") {
    s.residual_tol = get_double(v, key);
  } else if (key == "max_tau_steps") {
    s.max_tau_steps = get_integer(v, key);
  } else if (key == "stall_steps") {
    s.stall_steps = get_integer(v, key);
  } else if (key == "gamma_reg") {
    s.gamma_reg = get_double(v, key);
  } else if (key == "gauss_seidel_max_sweeps") {
    s.gauss_seidel_max_sweeps = static_cast<int>(get_integer(v, key));
  } else if (key == "path_init") {
    s.init = get_enum<PathInit>(v, key, &parse_path_init);
  } else if (key == "gradient_mode") {
    s.gradient_mode = get_enum<GradientMode>(v, key, &parse_gradient_mode);
  } else if (key == "placement") {
    const std::string tag = get_string(v, key);
    if (tag == "circle") {
      c.placement.kind = PlacementKind::circle;
    } else if (tag == "list") {
      c.placement.kind = PlacementKind::list;
    } else {
      throw ConfigError(key, "expected 'circle' or 'list'");
    }
  } else if (key == "placement_radius") {
    c.placement.radius = get_double(v, key);
  } else if (key == "placement_center") {
    c.placement.center = get_vec2(v, key);
  } else if (key == "placement_positions") {
    if (!v.is_array()) throw ConfigError(key, "expected a list of [x, y]");
    Positions positions;
    for (const json& item : v) positions.push_back(get_vec2(item, key));
    c.placement.positions = std::move(positions);
  } else if (key == "placement_jitter") {
    c.placement.jitter = get_double(v, key);
  } else if (key == "out") {
    c.out_dir = get_string(v, key);
  } else if (key == "debug_solver") {
    c.debug_solver = get_bool(v, key);
  } else {
    throw ConfigError(key, "unknown field");
  }
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::optimal:
      return "optimal";
    case StrategyKind::none:
      return "none";
    case StrategyKind::random:
      return "random";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view tag) {
  return parse_tag(tag, kAllStrategies);
}

std::string_view to_string(PathInit init) {
  switch (init) {
    case PathInit::uniform:
      return "uniform";
    case PathInit::straight_line:
      return "straight-line";
    case PathInit::advected:
      return "advected";
  }
  return "unknown";
}

std::optional<PathInit> parse_path_init(std::string_view tag) {
  return parse_tag(tag, kPathInits);
}

std::string_view to_string(GradientMode mode) {
  switch (mode) {
    case GradientMode::analytic:
      return "analytic";
    case GradientMode::finite_difference:
      return "finite-difference";
  }
  return "unknown";
}

std::optional<GradientMode> parse_gradient_mode(std::string_view tag) {
  return parse_tag(tag, kGradientModes);
}

SolverSettings ExperimentConfig::default_solver_settings() {
  SolverSettings settings;
  settings.init = PathInit::advected;
  return settings;
}

void ExperimentConfig::validate() const {
  if (gliders < 1) throw ConfigError("gliders", "cohort size must be >= 1");
  if (n_obs < 1) throw ConfigError("n_obs", "must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be > 0");
  if (!(u_max > 0.0) || !std::isfinite(u_max)) {
    throw ConfigError("u_max", "must be > 0");
  }
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw ConfigError("noise_var", "must be > 0");
  }
  if (!(prior_var > 0.0) || !std::isfinite(prior_var)) {
    throw ConfigError("prior_var", "must be > 0");
  }
  if (placement.kind == PlacementKind::list &&
      placement.positions.size() != static_cast<std::size_t>(gliders)) {
    throw ConfigError("placement_positions",
                      "need exactly one position per glider");
  }
  if (!(placement.radius >= 0.0)) {
    throw ConfigError("placement_radius", "must be >= 0");
  }
  if (!(placement.jitter >= 0.0)) {
    throw ConfigError("placement_jitter", "must be >= 0");
  }
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    throw ConfigError(what.substr(0, colon),
                      colon == std::string::npos ? what : what.substr(colon + 2));
  }
}

bool operator==(const SolverSettings& a, const SolverSettings& b) {
  return a.interior_points == b.interior_points && a.dtau == b.dtau &&
         a.adaptive_dtau == b.adaptive_dtau &&
         a.residual_tol == b.residual_tol &&
         a.max_tau_steps == b.max_tau_steps && a.stall_steps == b.stall_steps &&
         a.gamma_reg == b.gamma_reg &&
         a.gauss_seidel_max_sweeps == b.gauss_seidel_max_sweeps &&
         a.init == b.init && a.gradient_mode == b.gradient_mode &&
         a.record_history == b.record_history;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.flow == b.flow && a.gliders == b.gliders &&
         a.strategy == b.strategy && a.n_obs == b.n_obs && a.dt == b.dt &&
         a.u_max == b.u_max && a.noise_var == b.noise_var &&
         a.prior_var == b.prior_var && a.seed == b.seed &&
         a.solver == b.solver && a.placement == b.placement &&
         a.out_dir == b.out_dir && a.debug_solver == b.debug_solver;
}

std::string to_json(const ExperimentConfig& c) {
  json positions = json::array();
  for (const Vec2& p : c.placement.positions) {
    positions.push_back({p.x(), p.y()});
  }
  json j = {
      {"flow", std::string(to_string(c.flow))},
      {"gliders", c.gliders},
      {"strategy", std::string(to_string(c.strategy))},
      {"n_obs", c.n_obs},
      {"dt", c.dt},
      {"u_max", c.u_max},
      {"noise_var", c.noise_var},
      {"prior_var", c.prior_var},
      {"seed", c.seed},
      {"interior_points", c.solver.interior_points},
      {"dtau", c.solver.dtau},
      {"adaptive_dtau", c.solver.adaptive_dtau},
      {"residual_tol", c.solver.residual_tol},
      {"max_tau_steps", c.solver.max_tau_steps},
      {"stall_steps", c.solver.stall_steps},
      {"gamma_reg", c.solver.gamma_reg},
      {"gauss_seidel_max_sweeps", c.solver.gauss_seidel_max_sweeps},
      {"path_init", std::string(to_string(c.solver.init))},
      {"gradient_mode", std::string(to_string(c.solver.gradient_mode))},
      {"placement",
       c.placement.kind == PlacementKind::circle ? "circle" : "list"},
      {"placement_radius", c.placement.radius},
      {"placement_center", {c.placement.center.x(), c.placement.center.y()}},
      {"placement_positions", positions},
      {"placement_jitter", c.placement.jitter},
      {"out", c.out_dir},
      {"debug_solver", c.debug_solver},
  };
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(std::string_view text,
                                  const ExperimentConfig& base) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", "JSON syntax error at line " +
                              std::to_string(line_of_offset(text, e.byte)) +
                              ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig config = base;
  for (const auto& [key, value] : j.items()) {
    apply_key(config, key, value);
  }
  return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const ExperimentConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return config_from_json(buffer.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), std::string(e.what()) + " (in " + path.string() + ")");
  }
}

void apply_config_value(ExperimentConfig& config, std::string_view key,
                        std::string_view value) {
  const std::string name(key);
  json parsed = json::parse(value.begin(), value.end(), nullptr, false);
  if (parsed.is_discarded() || parsed.is_string()) {
    apply_key(config, name, parsed.is_string() ? parsed : json(std::string(value)));
    return;
  }
  try {
    apply_key(config, name, parsed);
  } catch (const ConfigError& original) {
    // e.g. an output directory named "2"
    ExperimentConfig trial = config;
    try {
      apply_key(trial, name, json(std::string(value)));
    } catch (const ConfigError&) {
      throw original;
    }
    config = std::move(trial);
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  const json j = json::parse(to_json(ExperimentConfig{}));
  for (const auto& item : j.items()) keys.push_back(item.key());
  return keys;
}

Positions initial_positions(const ExperimentConfig& config) {
  Positions positions;
  if (config.placement.kind == PlacementKind::list) {
    positions = config.placement.positions;
  } else {
    const int count = config.gliders;
    for (int k = 0; k < count; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / count;
      positions.push_back(config.placement.center +
                          config.placement.radius *
                              Vec2(std::cos(angle), std::sin(angle)));
    }
  }
  if (config.placement.jitter > 0.0) {
    CounterRng rng = make_stream(config.seed, RngStream::placement);
    std::normal_distribution<double> noise(0.0, config.placement.jitter);
    for (Vec2& p : positions) {
      p.x() += noise(rng);
      p.y() += noise(rng);
    }
  }
  return positions;
}

}  // namespace glider_assim
